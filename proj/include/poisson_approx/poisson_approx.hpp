#pragma once

#include "poisson_approx/bounds.hpp"
#include "poisson_approx/errors.hpp"
#include "poisson_approx/families.hpp"
#include "poisson_approx/lattice.hpp"
#include "poisson_approx/metrics.hpp"
#include "poisson_approx/model.hpp"
#include "poisson_approx/model_io.hpp"
#include "poisson_approx/oracle.hpp"
#include "poisson_approx/philox.hpp"
#include "poisson_approx/report.hpp"
#include "poisson_approx/simulator.hpp"
