#include "autotune/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include "autotune/errors.hpp"

namespace autotune {

namespace {

constexpr const char* kBo = "bo4co";
constexpr const char* kBoExplore = "bo4co-explore";

std::size_t parse_count(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const long long v = std::stoll(text, &used);
        if (used != text.size() || v < 0) {
            throw ConfigError("");
        }
        return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a nonnegative integer, got '" + text + "'");
    }
}

double parse_real(const std::string& key, const std::string& text) {
    try {
        std::size_t used = 0;
        const double v = std::stod(text, &used);
        if (used != text.size()) {
            throw ConfigError("");
        }
        return v;
    } catch (const std::exception&) {
        throw ConfigError(key + ": expected a number, got '" + text + "'");
    }
}

bool known_algorithm(const std::string& name) {
    if (name == kBo || name == kBoExplore) {
        return true;
    }
    try {
        parse_baseline(name);
        return true;
    } catch (const ConfigError&) {
        return false;
    }
}

NoiseSpec dataset_noise(const std::string& text) {
    if (text == "replicates") {
        return {NoiseMode::replicates, 0.0};
    }
    const double sigma = parse_real("noise", text);
    if (!(sigma >= 0.0)) {
        throw ConfigError("noise must be nonnegative");
    }
    return sigma == 0.0 ? NoiseSpec{NoiseMode::none, 0.0} : NoiseSpec{NoiseMode::fixed, sigma};
}

void require_file(const std::string& what, const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) {
        throw ConfigError(what + " '" + path + "' does not exist");
    }
}

}  // namespace

void ExperimentSpec::validate() const {
    switch (source) {
        case SourceKind::function:
            benchmark(function);
            if (!grid.empty() && grid.size() != benchmark(function).bounds.size()) {
                throw ConfigError(function + " needs " + std::to_string(benchmark(function).bounds.size()) +
                                  " grid sizes");
            }
            if (!(parse_real("noise", noise) >= 0.0)) {
                throw ConfigError("noise must be nonnegative");
            }
            break;
        case SourceKind::dataset:
            require_file("dataset", dataset);
            if (!space.empty()) {
                require_file("space declaration", space);
            }
            dataset_noise(noise);
            break;
        case SourceKind::command:
            if (command.empty()) {
                throw ConfigError("external command must not be empty");
            }
            require_file("space declaration", space);
            break;
    }
    if (algorithms.empty()) {
        throw ConfigError("no algorithms given");
    }
    for (const auto& a : algorithms) {
        if (!known_algorithm(a)) {
            throw ConfigError("unknown algorithm '" + a + "'");
        }
    }
    if (replications < 1) {
        throw ConfigError("replications must be >= 1");
    }
    if (jobs < 1) {
        throw ConfigError("jobs must be >= 1");
    }
    if (budget && *budget < 1) {
        throw ConfigError("budget must be >= 1");
    }
    if (learn_cycle < 1) {
        throw ConfigError("learn-cycle must be >= 1");
    }
    if (restarts < 1) {
        throw ConfigError("restarts must be >= 1");
    }
    parse_kappa(kappa, 1);
}

KappaSchedule parse_kappa(const std::string& text, std::size_t space_size) {
    const auto colon = text.find(':');
    const std::string mode = text.substr(0, colon);
    const std::string args = colon == std::string::npos ? "" : text.substr(colon + 1);
    KappaSchedule s;
    if (mode == "const") {
        s = KappaSchedule::constant(parse_real("kappa", args));
    } else if (mode == "adaptive") {
        const auto parts = split(args, ',');
        if (parts.size() != 2) {
            throw ConfigError("kappa: expected adaptive:<epsilon>,<r>");
        }
        const double r = parse_real("kappa", parts[1]);
        if (r != std::floor(r) || r < 2 || r > 64) {
            throw ConfigError("kappa: r must be an integer >= 2");
        }
        s = KappaSchedule::adaptive(parse_real("kappa", parts[0]), static_cast<int>(r), std::max<std::size_t>(space_size, 1));
    } else {
        throw ConfigError("kappa: expected const:<v> or adaptive:<epsilon>,<r>, got '" + text + "'");
    }
    try {
        s.validate();
    } catch (const ScheduleError& e) {
        throw ConfigError(std::string("kappa: ") + e.what());
    }
    return s;
}

KernelFamily parse_kernel(const std::string& text) {
    if (text == "matern") {
        return KernelFamily::matern12;
    }
    if (text == "categorical") {
        return KernelFamily::categorical_ard;
    }
    if (text == "product") {
        return KernelFamily::product_mixed;
    }
    throw ConfigError("kernel must be matern, categorical or product");
}

MeanForm parse_mean(const std::string& text) {
    if (text == "const") {
        return MeanForm::constant;
    }
    if (text == "linear") {
        return MeanForm::linear;
    }
    throw ConfigError("mean must be const or linear");
}

std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::matern12:
            return "matern";
        case KernelFamily::categorical_ard:
            return "categorical";
        case KernelFamily::product_mixed:
            return "product";
    }
    return "?";
}

std::string to_string(MeanForm form) { return form == MeanForm::constant ? "const" : "linear"; }

std::vector<std::size_t> parse_grid(const std::string& text) {
    std::vector<std::size_t> sizes;
    for (const auto& part : split(text, ',')) {
        const auto m = parse_count("grid", trim(part));
        if (m < 2) {
            throw ConfigError("grid sizes must be >= 2");
        }
        sizes.push_back(m);
    }
    return sizes;
}

std::vector<std::string> parse_algorithms(const std::string& text) {
    std::vector<std::string> out;
    for (const auto& part : split(text, ',')) {
        const auto name = trim(part);
        if (!name.empty()) {
            out.push_back(name);
        }
    }
    return out;
}

void apply_config(ExperimentSpec& spec, const KeyValueFile& file) {
    for (const auto& e : file.entries()) {
        const auto& k = e.key;
        const auto& v = e.value;
        if (k == "function") {
            spec.source = SourceKind::function;
            spec.function = v;
        } else if (k == "grid") {
            spec.grid = parse_grid(v);
        } else if (k == "noise") {
            spec.noise = v;
        } else if (k == "dataset") {
            spec.source = SourceKind::dataset;
            spec.dataset = v;
        } else if (k == "space") {
            spec.space = v;
        } else if (k == "command") {
            spec.source = SourceKind::command;
            spec.command = v;
        } else if (k == "algorithms") {
            spec.algorithms = parse_algorithms(v);
        } else if (k == "budget") {
            spec.budget = parse_count(k, v);
        } else if (k == "init-design") {
            spec.init_design = parse_count(k, v);
        } else if (k == "learn-cycle") {
            spec.learn_cycle = parse_count(k, v);
        } else if (k == "restarts") {
            spec.restarts = static_cast<int>(parse_count(k, v));
        } else if (k == "kappa") {
            spec.kappa = v;
        } else if (k == "kernel") {
            spec.kernel = parse_kernel(v);
        } else if (k == "mean") {
            spec.mean = parse_mean(v);
        } else if (k == "replications") {
            spec.replications = parse_count(k, v);
        } else if (k == "seed") {
            spec.seed = parse_count(k, v);
        } else if (k == "jobs") {
            spec.jobs = parse_count(k, v);
        } else if (k == "out") {
            spec.out = v;
        } else {
            throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + k + "'");
        }
    }
}

ExperimentSpec load_experiment_spec(const std::string& path) {
    ExperimentSpec spec;
    apply_config(spec, KeyValueFile::load(path));
    return spec;
}

Problem build_problem(const ExperimentSpec& spec) {
    switch (spec.source) {
        case SourceKind::function: {
            const auto& fn = benchmark(spec.function);
            const auto sizes = spec.grid.empty() ? default_grid_sizes(fn) : spec.grid;
            auto grid = make_grid_source(fn, sizes, parse_real("noise", spec.noise), spec.seed);
            return Problem{grid.space, grid.source->fork(spec.seed), grid.truth, nullptr};
        }
        case SourceKind::dataset: {
            const auto space = spec.space.empty() ? infer_space(spec.dataset) : load_space_declaration(spec.space);
            auto data = std::make_shared<const TabularDataset>(load_dataset(spec.dataset, space));
            auto source = std::make_unique<PlaybackSource>(data, dataset_noise(spec.noise), spec.seed);
            auto truth = scan_minimum(space, [&](std::size_t i) { return *data->value(space.point_at(i)); });
            return Problem{space, std::move(source), truth, data};
        }
        case SourceKind::command: {
            const auto space = load_space_declaration(spec.space);
            return Problem{space, std::make_unique<ExternalCommandSource>(space, spec.command), std::nullopt,
                           nullptr};
        }
    }
    throw ConfigError("unknown source");
}

BudgetConfig budget_for(const ExperimentSpec& spec, const ConfigSpace& space, std::uint64_t seed) {
    auto budget = BudgetConfig::defaults(space, spec.budget.value_or(100), seed);
    if (spec.init_design) {
        budget.initial_design = *spec.init_design;
    }
    budget.learn_cycle = spec.learn_cycle;
    budget.restarts = spec.restarts;
    budget.validate(space);
    return budget;
}

RunTrace run_algorithm(const std::string& algorithm, const ExperimentSpec& spec, const Problem& problem,
                       std::uint64_t seed) {
    const auto budget = budget_for(spec, problem.space, seed);
    auto source = problem.prototype->fork(seed);
    if (algorithm == kBo || algorithm == kBoExplore) {
        TunerOptions options;
        options.kernel = spec.kernel;
        options.mean = spec.mean;
        options.kappa = parse_kappa(spec.kappa, problem.space.size());
        options.criterion = algorithm == kBo ? Criterion::lcb : Criterion::exploration_only;
        auto trace = run_bo4co(problem.space, *source, budget, options);
        trace.algorithm = algorithm;
        return trace;
    }
    return run_baseline(parse_baseline(algorithm), problem.space, *source, budget);
}

ExperimentResult run_experiment(const ExperimentSpec& spec, const Problem& problem, const LogFn& log) {
    spec.validate();
    ExperimentResult result;
    if (problem.truth) {
        result.ground_truth = problem.truth->minimum;
    }
    for (const auto& a : spec.algorithms) {
        result.runs.push_back({a, std::vector<RunTrace>(spec.replications)});
    }
    const std::size_t total = spec.algorithms.size() * spec.replications;
    std::atomic<std::size_t> next{0};
    std::mutex mu;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t task = next.fetch_add(1);
            if (task >= total) {
                return;
            }
            const std::size_t a = task / spec.replications;
            const std::size_t rep = task % spec.replications;
            try {
                auto trace = run_algorithm(spec.algorithms[a], spec, problem, spec.seed + rep);
                std::lock_guard lock(mu);
                if (log) {
                    log(spec.algorithms[a] + " replication " + std::to_string(rep) + ": best " +
                        std::to_string(trace.best_y) + " after " + std::to_string(trace.records.size()) +
                        " evaluations");
                }
                result.runs[a].traces[rep] = std::move(trace);
            } catch (...) {
                std::lock_guard lock(mu);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(total);
                return;
            }
        }
    };
    const std::size_t workers = std::min(spec.jobs, total);
    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t i = 0; i < workers; ++i) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    for (const auto& runs : result.runs) {
        for (const auto& t : runs.traces) {
            if (!std::isfinite(t.best_y)) {
                result.measurement_failed = true;
            }
        }
    }
    return result;
}

}  // namespace autotune
