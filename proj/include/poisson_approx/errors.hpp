#pragma once

#include <stdexcept>
#include <string>

namespace poisson_approx {

// Base class for all library errors. Subclasses mirror the failure modes of
// the public operations so callers can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// A requested point mass does not sit on the lattice.
class NonLatticePoint : public Error {
public:
    using Error::Error;
};

// Two distributions do not share a lattice step.
class IncompatibleLattice : public Error {
public:
    using Error::Error;
};

// A transform produced a weight below the roundoff floor (-1e-12).
class NumericalCorruption : public Error {
public:
    using Error::Error;
};

// Tolerance argument outside its documented range.
class InvalidTolerance : public Error {
public:
    using Error::Error;
};

// A convolution product would exceed the configured support cap.
class SupportOverflow : public Error {
public:
    using Error::Error;
};

// Weight function failed the class-G probe validation.
class NotClassG : public Error {
public:
    using Error::Error;
};

// A theorem evaluation is missing a required free parameter.
class MissingParam : public Error {
public:
    using Error::Error;
};

// Some U_i carries mass outside the declared support interval.
class SupportViolation : public Error {
public:
    using Error::Error;
};

// A free parameter was given below its lambda floor.
class ParamBelowLambda : public Error {
public:
    using Error::Error;
};

// Empirical operation invoked on an empty sample.
class EmptySample : public Error {
public:
    using Error::Error;
};

// Regions passed to an independence check are not disjoint.
class OverlappingRegions : public Error {
public:
    using Error::Error;
};

// Brute-force oracle invoked beyond its enumeration cap.
class TooLarge : public Error {
public:
    using Error::Error;
};

// Malformed configuration or model file; message names the offending field.
class BadInput : public Error {
public:
    using Error::Error;
};

}  // namespace poisson_approx
