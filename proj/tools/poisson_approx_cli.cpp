#include <algorithm>
#include <atomic>
#include <clocale>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "poisson_approx/poisson_approx.hpp"

namespace pa = poisson_approx;

namespace {

struct ExperimentConfig {
    std::string command;
    std::string model_path;
    std::string theorem = "t0";
    std::string g_name = "abs";
    std::string family = "";  // empty = pick by theorem
    std::optional<double> tau;
    std::optional<double> gamma;
    std::optional<double> kappa;
    std::optional<double> lambda;
    std::uint64_t families = 0;
    std::uint64_t reps = 100000;
    std::uint64_t seed = 1;
    std::string out_path;
    std::string format = "csv";
};

std::size_t thread_budget() {
    const char* env = std::getenv("POISSON_APPROX_THREADS");
    if (env == nullptr || *env == '\0') return 1;
    char* end = nullptr;
    const unsigned long long parsed = std::strtoull(env, &end, 10);
    if (end == env || *end != '\0' || parsed == 0) {
        throw pa::BadInput("POISSON_APPROX_THREADS must be a positive integer");
    }
    return static_cast<std::size_t>(std::min<unsigned long long>(parsed, 64));
}

// strided static schedule; output slots are preassigned, so results are
// identical for every thread count
void parallel_for(std::size_t count, const std::function<void(std::size_t)>& fn) {
    const std::size_t threads = std::min(std::max<std::size_t>(thread_budget(), 1),
                                         std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::mutex err_mutex;
    std::exception_ptr first_error;
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) {
        pool.emplace_back([&, t] {
            try {
                for (std::size_t i = t; i < count; i += threads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& worker : pool) worker.join();
    if (first_error) std::rethrow_exception(first_error);
}

pa::GFunction g_from_name(const std::string& name) {
    if (name == "abs") return pa::make_g_abs();
    if (name == "square") return pa::make_g_square();
    throw pa::BadInput("--g must be abs or square, got '" + name + "'");
}

bool needs_tau(pa::TheoremId id) {
    return id == pa::TheoremId::LeCam || id == pa::TheoremId::Cor1 ||
           id == pa::TheoremId::T5 || id == pa::TheoremId::T6;
}

bool needs_gamma(pa::TheoremId id) {
    return id == pa::TheoremId::T3 || id == pa::TheoremId::Bernstein;
}

bool needs_kappa(pa::TheoremId id) { return id == pa::TheoremId::T4; }

// fill free parameters the user left out with the documented defaults
pa::FreeParams make_params(const ExperimentConfig& cfg, const pa::RareEventModel& model,
                           pa::TheoremId id) {
    pa::FreeParams params;
    params.g = g_from_name(cfg.g_name);
    params.delta_seed = cfg.seed;
    if (cfg.tau.has_value()) {
        params.tau = *cfg.tau;
    } else if (needs_tau(id)) {
        params.tau = std::max(pa::detail::model_support_radius(model), model.step);
    }
    if (cfg.gamma.has_value() || cfg.kappa.has_value() || needs_gamma(id) ||
        needs_kappa(id)) {
        const auto summary = pa::summarize(model);
        const auto bl = pa::beta_lambda(model, params.g);
        const double fallback = pa::default_gamma(summary, bl.lambda);
        if (needs_gamma(id)) params.gamma = cfg.gamma.value_or(fallback);
        if (needs_kappa(id)) params.kappa = cfg.kappa.value_or(fallback);
        if (cfg.gamma.has_value()) params.gamma = *cfg.gamma;
        if (cfg.kappa.has_value()) params.kappa = *cfg.kappa;
    }
    return params;
}

struct InstanceResult {
    std::uint64_t instance = 0;
    std::size_t n = 0;
    double step = 0.0;
    double rho12 = 0.0;
    double rho13 = 0.0;
    pa::BoundEvaluation eval;
    std::optional<pa::DeltaTailEstimate> mc;  // bernstein rows only
};

double pick_ratio(pa::TheoremId id, const InstanceResult& r) {
    const double total = r.eval.total_with_c1;
    double achieved = r.rho12;
    if (id == pa::TheoremId::T2) achieved = r.rho13;
    if (id == pa::TheoremId::Bernstein) achieved = r.mc ? r.mc->estimate : 0.0;
    return achieved / total;
}

pa::Table results_to_table(pa::TheoremId id, const std::vector<InstanceResult>& results) {
    std::set<std::string> term_keys;
    std::set<std::string> param_keys;
    for (const auto& r : results) {
        for (const auto& [key, value] : r.eval.terms) term_keys.insert(key);
        for (const auto& [key, value] : r.eval.free_params) param_keys.insert(key);
    }
    pa::Table table;
    table.header = {"instance", "n", "step", "rho_h1_h2", "rho_h1_h3"};
    for (const auto& key : term_keys) table.header.push_back(key);
    table.header.push_back("total");
    table.header.push_back("ratio");
    table.header.push_back("error_budget");
    if (id == pa::TheoremId::Bernstein) {
        table.header.push_back("mc_estimate");
        table.header.push_back("mc_std_error");
    }
    for (const auto& key : param_keys) table.header.push_back("param_" + key);

    for (const auto& r : results) {
        std::vector<pa::Cell> row;
        row.push_back(pa::Cell::count(static_cast<std::int64_t>(r.instance)));
        row.push_back(pa::Cell::count(static_cast<std::int64_t>(r.n)));
        row.push_back(pa::Cell::num(r.step));
        row.push_back(pa::Cell::num(r.rho12));
        row.push_back(pa::Cell::num(r.rho13));
        for (const auto& key : term_keys) {
            const auto it = r.eval.terms.find(key);
            row.push_back(it == r.eval.terms.end() ? pa::Cell::empty()
                                                   : pa::Cell::num(it->second));
        }
        row.push_back(pa::Cell::num(r.eval.total_with_c1));
        row.push_back(pa::Cell::num(pick_ratio(id, r)));
        row.push_back(pa::Cell::num(r.eval.error_budget));
        if (id == pa::TheoremId::Bernstein) {
            row.push_back(r.mc ? pa::Cell::num(r.mc->estimate) : pa::Cell::empty());
            row.push_back(r.mc ? pa::Cell::num(r.mc->std_error) : pa::Cell::empty());
        }
        for (const auto& key : param_keys) {
            const auto it = r.eval.free_params.find(key);
            row.push_back(it == r.eval.free_params.end() ? pa::Cell::empty()
                                                         : pa::Cell::num(it->second));
        }
        table.add_row(std::move(row));
    }
    return table;
}

InstanceResult evaluate_instance(const ExperimentConfig& cfg, pa::TheoremId id,
                                 const pa::RareEventModel& model, std::uint64_t instance) {
    InstanceResult result;
    result.instance = instance;
    result.n = model.size();
    result.step = model.step;
    const auto params = make_params(cfg, model, id);
    result.eval = pa::theorem_rhs(id, model, params);
    const auto laws = pa::build_laws(model, params.tail_tol, params.support_cap);
    result.rho12 = pa::kolmogorov_rho(laws.h1, laws.h2);
    result.rho13 = pa::kolmogorov_rho(laws.h1, laws.h3);
    if (id == pa::TheoremId::Bernstein) {
        const auto summary = pa::summarize(model);
        const double gamma = result.eval.free_params.at("gamma");
        result.mc = pa::delta_tail_mc(
            summary, gamma, std::max<std::size_t>(cfg.reps, 10000),
            cfg.seed ^ (instance * 0x9e3779b97f4a7c15ull));
    }
    return result;
}

pa::Table verify_table(const ExperimentConfig& cfg) {
    if (cfg.families == 0) {
        throw pa::BadInput("verify requires --families >= 1");
    }
    const auto id = pa::theorem_from_name(cfg.theorem);
    const pa::FamilyKind kind =
        !cfg.family.empty() ? pa::family_from_name(cfg.family)
        : id == pa::TheoremId::T0 ? pa::FamilyKind::Theorem0
                                  : pa::FamilyKind::General;
    std::vector<InstanceResult> results(cfg.families);
    parallel_for(cfg.families, [&](std::size_t i) {
        const auto model = pa::family_model(kind, cfg.seed, i);
        results[i] = evaluate_instance(cfg, id, model, i);
    });
    return results_to_table(id, results);
}

std::vector<pa::Cell> sandwich_row(std::uint64_t instance, const pa::SandwichReport& r) {
    return {pa::Cell::count(static_cast<std::int64_t>(instance)),
            pa::Cell::num(r.lambda),
            pa::Cell::num(r.tau),
            pa::Cell::num(r.p),
            pa::Cell::num(r.control_term),
            pa::Cell::num(r.delta_term),
            pa::Cell::count(r.delta_exact ? 1 : 0),
            pa::Cell::num(r.slack_lower),
            pa::Cell::num(r.slack_upper),
            pa::Cell::num(r.pair_excess),
            pa::Cell::num(r.pair_std_error),
            pa::Cell::num(r.pair_bound),
            pa::Cell::count(r.pair_coupled ? 1 : 0),
            pa::Cell::num(r.error_budget),
            pa::Cell::count(static_cast<std::int64_t>(r.reps))};
}

pa::Table sandwich_table() {
    pa::Table table;
    table.header = {"instance",      "lambda",       "tau",
                    "p",             "control_term", "delta_term",
                    "delta_exact",   "slack_lower",  "slack_upper",
                    "pair_excess",   "pair_std_error", "pair_bound",
                    "pair_coupled",  "error_budget", "reps"};
    return table;
}

pa::SandwichReport run_sandwich(const ExperimentConfig& cfg, const pa::LoadedModel& model,
                                double lambda) {
    if (model.dim == 1) {
        return pa::verify_sandwich(*model.scalar, lambda, cfg.reps, cfg.seed);
    }
    return pa::verify_sandwich_mc(*model.vector, lambda, cfg.reps, cfg.seed);
}

pa::Table simulate_table(const ExperimentConfig& cfg) {
    if (cfg.model_path.empty()) {
        throw pa::BadInput("simulate requires --model");
    }
    if (!cfg.lambda.has_value()) {
        throw pa::MissingParam("simulate requires --lambda");
    }
    const auto model = pa::read_model_file(cfg.model_path);
    auto table = sandwich_table();
    table.add_row(sandwich_row(0, run_sandwich(cfg, model, *cfg.lambda)));
    return table;
}

pa::Table sweep_table(const ExperimentConfig& cfg) {
    if (cfg.model_path.empty()) {
        throw pa::BadInput("sweep requires --model");
    }
    const auto model = pa::read_model_file(cfg.model_path);
    const double step = model.dim == 1 ? model.scalar->step : 1.0;
    std::vector<double> grid;
    for (int k = 0; k < 12; ++k) {
        grid.push_back(step * std::ldexp(1.0, k - 2));  // step/4 doubling to 512*step
    }
    std::vector<pa::SandwichReport> reports(grid.size());
    parallel_for(grid.size(), [&](std::size_t i) {
        reports[i] = run_sandwich(cfg, model, grid[i]);
    });
    auto table = sandwich_table();
    for (std::size_t i = 0; i < reports.size(); ++i) {
        table.add_row(sandwich_row(i, reports[i]));
    }
    return table;
}

void compute_object(const ExperimentConfig& cfg, std::ostream& out) {
    if (cfg.model_path.empty()) {
        throw pa::BadInput("compute requires --model");
    }
    const auto loaded = pa::read_model_file(cfg.model_path);
    if (loaded.dim != 1) {
        throw pa::BadInput("compute needs a scalar (dim = 1) model");
    }
    const auto id = pa::theorem_from_name(cfg.theorem);
    const auto result = evaluate_instance(cfg, id, *loaded.scalar, 0);

    if (cfg.format == "csv") {
        results_to_table(id, {result}).write_csv(out);
        return;
    }
    std::vector<std::pair<std::string, pa::Cell>> fields;
    fields.emplace_back("theorem", pa::Cell::str(pa::theorem_name(id)));
    fields.emplace_back("g", pa::Cell::str(result.eval.g_name));
    for (const auto& [key, value] : result.eval.terms) {
        fields.emplace_back("term_" + key, pa::Cell::num(value));
    }
    for (const auto& [key, value] : result.eval.free_params) {
        fields.emplace_back("param_" + key, pa::Cell::num(value));
    }
    fields.emplace_back("total_with_c1", pa::Cell::num(result.eval.total_with_c1));
    fields.emplace_back("rho_h1_h2", pa::Cell::num(result.rho12));
    fields.emplace_back("rho_h1_h3", pa::Cell::num(result.rho13));
    fields.emplace_back("ratio", pa::Cell::num(pick_ratio(id, result)));
    fields.emplace_back("error_budget", pa::Cell::num(result.eval.error_budget));
    pa::write_json_object(out, fields);
}

int run(const ExperimentConfig& cfg) {
    if (cfg.format != "csv" && cfg.format != "json") {
        throw pa::BadInput("--format must be csv or json");
    }
    if (cfg.reps == 0) {
        throw pa::BadInput("--reps must be at least 1");
    }
    std::ostringstream buffer;
    if (cfg.command == "compute") {
        compute_object(cfg, buffer);
    } else {
        pa::Table table;
        if (cfg.command == "verify") {
            table = verify_table(cfg);
        } else if (cfg.command == "simulate") {
            table = simulate_table(cfg);
        } else if (cfg.command == "sweep") {
            table = sweep_table(cfg);
        } else {
            throw pa::BadInput("unknown command '" + cfg.command + "'");
        }
        if (cfg.format == "csv") {
            table.write_csv(buffer);
        } else {
            table.write_json(buffer);
        }
    }
    if (cfg.out_path.empty()) {
        std::cout << buffer.str();
    } else {
        std::ofstream out(cfg.out_path, std::ios::binary);
        if (!out) {
            throw pa::BadInput("cannot open output file '" + cfg.out_path + "'");
        }
        out << buffer.str();
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    std::setlocale(LC_ALL, "C");
    ExperimentConfig cfg;
    double tau = 0.0, gamma = 0.0, kappa = 0.0, lambda = 0.0;

    CLI::App app{"compound Poisson rare-event bound harness"};
    app.require_subcommand(1);
    std::vector<CLI::App*> subs;
    for (const char* name : {"compute", "verify", "simulate", "sweep"}) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--model", cfg.model_path, "model JSON file");
        sub->add_option("--theorem", cfg.theorem,
                        "one of t0|lecam|cor1|t2|t3|t4|t5|t6|bernstein");
        sub->add_option("--g", cfg.g_name, "weight function: abs or square");
        sub->add_option("--tau", tau, "support radius parameter");
        sub->add_option("--gamma", gamma, "tail split parameter");
        sub->add_option("--kappa", kappa, "concentration width parameter");
        sub->add_option("--lambda", lambda, "sandwich shift parameter");
        sub->add_option("--families", cfg.families, "number of generated instances");
        sub->add_option("--family", cfg.family,
                        "instance family: theorem0, general, or degenerate");
        sub->add_option("--reps", cfg.reps, "Monte Carlo replications");
        sub->add_option("--seed", cfg.seed, "64-bit RNG seed");
        sub->add_option("--out", cfg.out_path, "output file (default stdout)");
        sub->add_option("--format", cfg.format, "csv or json");
        subs.push_back(sub);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    for (auto* sub : subs) {
        if (!sub->parsed()) continue;
        cfg.command = sub->get_name();
        if (sub->count("--tau") > 0) cfg.tau = tau;
        if (sub->count("--gamma") > 0) cfg.gamma = gamma;
        if (sub->count("--kappa") > 0) cfg.kappa = kappa;
        if (sub->count("--lambda") > 0) cfg.lambda = lambda;
    }

    try {
        return run(cfg);
    } catch (const pa::TooLarge& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const pa::SupportOverflow& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const pa::NumericalCorruption& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const pa::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
