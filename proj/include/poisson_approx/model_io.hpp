#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "poisson_approx/errors.hpp"
#include "poisson_approx/lattice.hpp"
#include "poisson_approx/model.hpp"
#include "poisson_approx/simulator.hpp"

namespace poisson_approx {

struct LoadedModel {
    std::size_t dim = 1;
    std::optional<RareEventModel> scalar;  // present when dim == 1
    std::optional<MarkSampler> vector;     // present when dim >= 2
};

namespace detail {

inline const nlohmann::json& json_field(const nlohmann::json& j, const std::string& key,
                                        const std::string& where) {
    if (!j.is_object() || !j.contains(key)) {
        throw BadInput(where + " is missing field '" + key + "'");
    }
    return j.at(key);
}

inline double json_number(const nlohmann::json& j, const std::string& where) {
    if (!j.is_number()) {
        throw BadInput(where + " must be a number");
    }
    const double x = j.get<double>();
    if (!std::isfinite(x)) {
        throw BadInput(where + " must be finite");
    }
    return x;
}

inline std::int64_t json_integer(const nlohmann::json& j, const std::string& where) {
    const double x = json_number(j, where);
    if (std::abs(x) > 1e15 || x != std::floor(x)) {
        throw BadInput(where + " must be an integer lattice offset");
    }
    return static_cast<std::int64_t>(x);
}

inline LatticeDistribution lattice_law_from_json(const nlohmann::json& j, double step,
                                                 const std::string& where) {
    const auto& atoms = json_field(j, "atoms", where);
    if (!atoms.is_array() || atoms.empty()) {
        throw BadInput(where + ".atoms must be a non-empty array");
    }
    std::map<std::int64_t, double> accum;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const std::string at = where + ".atoms[" + std::to_string(k) + "]";
        const auto& entry = atoms[k];
        if (!entry.is_array() || entry.size() != 2) {
            throw BadInput(at + " must be a pair [offset_multiple, weight]");
        }
        const std::int64_t offset = json_integer(entry[0], at + " offset");
        const double weight = json_number(entry[1], at + " weight");
        if (weight < 0.0) {
            throw BadInput(at + " weight must be non-negative");
        }
        accum[offset] += weight;
    }
    const std::int64_t origin = accum.begin()->first;
    const std::int64_t span = accum.rbegin()->first - origin;
    if (span > (1 << 24)) {
        throw TooLarge(where + " spans too many lattice points");
    }
    std::vector<double> dense(static_cast<std::size_t>(span) + 1, 0.0);
    for (const auto& [offset, weight] : accum) {
        dense[static_cast<std::size_t>(offset - origin)] = weight;
    }
    return LatticeDistribution::make(step, origin, dense);
}

inline DiscreteVectorLaw vector_law_from_json(const nlohmann::json& j, std::size_t dim,
                                              const std::string& where) {
    const auto& atoms = json_field(j, "atoms", where);
    if (!atoms.is_array() || atoms.empty()) {
        throw BadInput(where + ".atoms must be a non-empty array");
    }
    std::vector<Mark> marks;
    std::vector<double> weights;
    for (std::size_t k = 0; k < atoms.size(); ++k) {
        const std::string at = where + ".atoms[" + std::to_string(k) + "]";
        const auto& entry = atoms[k];
        if (!entry.is_array() || entry.size() != 2 || !entry[0].is_array() ||
            entry[0].size() != dim) {
            throw BadInput(at + " must be [[" + std::to_string(dim) +
                           " coordinates], weight]");
        }
        Mark mark{0.0, 0.0, 0.0};
        for (std::size_t c = 0; c < dim; ++c) {
            mark[c] = json_number(entry[0][c], at + " coordinate " + std::to_string(c));
        }
        const double weight = json_number(entry[1], at + " weight");
        if (weight < 0.0) {
            throw BadInput(at + " weight must be non-negative");
        }
        marks.push_back(mark);
        weights.push_back(weight);
    }
    return DiscreteVectorLaw::make(dim, std::move(marks), std::move(weights));
}

}  // namespace detail

inline RareEventModel model_from_json(const nlohmann::json& j) {
    const double step = detail::json_number(detail::json_field(j, "step", "model"), "step");
    if (!(step > 0.0)) {
        throw BadInput("step must be positive");
    }
    const auto& comps = detail::json_field(j, "components", "model");
    if (!comps.is_array() || comps.empty()) {
        throw BadInput("components must be a non-empty array");
    }
    RareEventModel model;
    model.step = step;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string where = "components[" + std::to_string(i) + "]";
        const double p = detail::json_number(detail::json_field(comps[i], "p", where),
                                             where + ".p");
        if (!(p >= 0.0 && p <= 1.0)) {
            throw BadInput(where + ".p must lie in [0,1]");
        }
        auto u = detail::lattice_law_from_json(detail::json_field(comps[i], "U", where),
                                               step, where + ".U");
        auto v = detail::lattice_law_from_json(detail::json_field(comps[i], "V", where),
                                               step, where + ".V");
        model.components.push_back({p, std::move(u), std::move(v)});
    }
    model.validate();
    return model;
}

inline MarkSampler sampler_from_json(const nlohmann::json& j, std::size_t dim) {
    const auto& comps = detail::json_field(j, "components", "model");
    if (!comps.is_array() || comps.empty()) {
        throw BadInput("components must be a non-empty array");
    }
    MarkSampler sampler;
    sampler.dim = dim;
    for (std::size_t i = 0; i < comps.size(); ++i) {
        const std::string where = "components[" + std::to_string(i) + "]";
        const double p = detail::json_number(detail::json_field(comps[i], "p", where),
                                             where + ".p");
        if (!(p >= 0.0 && p <= 1.0)) {
            throw BadInput(where + ".p must lie in [0,1]");
        }
        auto u = detail::vector_law_from_json(detail::json_field(comps[i], "U", where),
                                              dim, where + ".U");
        auto v = detail::vector_law_from_json(detail::json_field(comps[i], "V", where),
                                              dim, where + ".V");
        sampler.components.push_back({p, std::move(u), std::move(v)});
    }
    sampler.validate();
    return sampler;
}

inline LoadedModel model_from_json_any(const nlohmann::json& j) {
    LoadedModel out;
    if (j.is_object() && j.contains("dim")) {
        const std::int64_t dim = detail::json_integer(j.at("dim"), "dim");
        if (dim < 1 || dim > static_cast<std::int64_t>(kMaxMarkDim)) {
            throw BadInput("dim must be 1, 2, or 3");
        }
        out.dim = static_cast<std::size_t>(dim);
    }
    if (out.dim == 1) {
        out.scalar = model_from_json(j);
    } else {
        out.vector = sampler_from_json(j, out.dim);
    }
    return out;
}

inline LoadedModel read_model_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw BadInput("cannot open model file '" + path + "'");
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw BadInput("model file '" + path + "' is not valid JSON: " + e.what());
    }
    return model_from_json_any(j);
}

inline nlohmann::ordered_json model_to_json(const RareEventModel& model) {
    nlohmann::ordered_json j;
    j["step"] = model.step;
    j["components"] = nlohmann::ordered_json::array();
    for (const auto& comp : model.components) {
        nlohmann::ordered_json c;
        c["p"] = comp.p;
        for (const auto& [key, law] : {std::pair{"U", &comp.u}, std::pair{"V", &comp.v}}) {
            nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
            for (std::size_t k = 0; k < law->size(); ++k) {
                if (law->weights()[k] <= 0.0) continue;
                atoms.push_back({law->origin() + static_cast<std::int64_t>(k),
                                 law->weights()[k]});
            }
            c[key] = {{"atoms", atoms}};
        }
        j["components"].push_back(std::move(c));
    }
    return j;
}

inline void write_model_file(const RareEventModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw BadInput("cannot open output file '" + path + "'");
    }
    out << model_to_json(model).dump(2) << "\n";
}

}  // namespace poisson_approx
