// gp_autotune: run tuning experiments, screen datasets, report overhead.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "autotune/analysis.hpp"
#include "autotune/errors.hpp"
#include "autotune/experiment.hpp"
#include "autotune/report.hpp"

namespace {

using namespace autotune;

enum class Level { error = 0, warn = 1, info = 2, debug = 3 };

Level log_level() {
    const char* env = std::getenv("GP_AUTOTUNE_LOG");
    const std::string v = env == nullptr ? "" : env;
    if (v == "error") {
        return Level::error;
    }
    if (v == "info") {
        return Level::info;
    }
    if (v == "debug") {
        return Level::debug;
    }
    return Level::warn;
}

void log(Level level, const std::string& msg) {
    static const Level threshold = log_level();
    if (level <= threshold) {
        static const char* names[] = {"error", "warn", "info", "debug"};
        std::cerr << "[" << names[static_cast<int>(level)] << "] " << msg << '\n';
    }
}

constexpr int kOk = 0;
constexpr int kConfig = 2;
constexpr int kMeasurement = 3;

struct Flags {
    std::string config;
    std::string dataset;
    std::string space;
    std::string command;
    std::string function;
    std::string grid;
    std::string noise;
    std::size_t budget = 0;
    std::size_t init_design = 0;
    std::size_t learn_cycle = 0;
    std::string kappa;
    std::string kernel;
    std::string mean;
    std::string algorithms;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::string out;
};

void add_spec_flags(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "Run file (key = value, keys as flag names)");
    cmd->add_option("--dataset", f.dataset, "Measurement CSV to play back");
    cmd->add_option("--space", f.space, "Space declaration (inferred from the dataset if omitted)");
    cmd->add_option("--command", f.command, "External measurement command");
    cmd->add_option("--function", f.function, "Benchmark: branin, dixon, hartmann3, rosenbrock5");
    cmd->add_option("--grid", f.grid, "Grid sizes per dimension, e.g. 51,51");
    cmd->add_option("--noise", f.noise, "Noise sigma, or 'replicates' for datasets");
    cmd->add_option("--budget", f.budget, "Maximum evaluations (default 100)");
    cmd->add_option("--init-design", f.init_design, "Initial design size (default max(d+1, 9))");
    cmd->add_option("--learn-cycle", f.learn_cycle, "Relearn hyperparameters every N evaluations");
    cmd->add_option("--kappa", f.kappa, "const:<v> or adaptive:<eps>,<r>");
    cmd->add_option("--kernel", f.kernel, "matern, categorical or product");
    cmd->add_option("--mean", f.mean, "const or linear");
    cmd->add_option("--algorithms", f.algorithms, "bo4co,bo4co-explore,sa,hill,ps,drift,random");
    cmd->add_option("--replications", f.replications, "Independent runs per algorithm");
    cmd->add_option("--seed", f.seed, "Base seed; replication i uses seed + i");
    cmd->add_option("--jobs", f.jobs, "Concurrent replications");
    cmd->add_option("--out", f.out, "Output directory");
}

ExperimentSpec build_spec(const CLI::App& cmd, const Flags& f) {
    ExperimentSpec spec;
    if (!f.config.empty()) {
        if (!std::filesystem::is_regular_file(f.config)) {
            throw ConfigError("config file '" + f.config + "' does not exist");
        }
        spec = load_experiment_spec(f.config);
    }
    auto given = [&](const char* name) { return cmd.count(name) > 0; };
    if (given("--function")) {
        spec.source = SourceKind::function;
        spec.function = f.function;
    }
    if (given("--dataset")) {
        spec.source = SourceKind::dataset;
        spec.dataset = f.dataset;
    }
    if (given("--command")) {
        spec.source = SourceKind::command;
        spec.command = f.command;
    }
    if (given("--space")) {
        spec.space = f.space;
    }
    if (given("--grid")) {
        spec.grid = parse_grid(f.grid);
    }
    if (given("--noise")) {
        spec.noise = f.noise;
    }
    if (given("--budget")) {
        spec.budget = f.budget;
    }
    if (given("--init-design")) {
        spec.init_design = f.init_design;
    }
    if (given("--learn-cycle")) {
        spec.learn_cycle = f.learn_cycle;
    }
    if (given("--kappa")) {
        spec.kappa = f.kappa;
    }
    if (given("--kernel")) {
        spec.kernel = parse_kernel(f.kernel);
    }
    if (given("--mean")) {
        spec.mean = parse_mean(f.mean);
    }
    if (given("--algorithms")) {
        spec.algorithms = parse_algorithms(f.algorithms);
    }
    if (given("--replications")) {
        spec.replications = f.replications;
    }
    if (given("--seed")) {
        spec.seed = f.seed;
    }
    if (given("--jobs")) {
        spec.jobs = f.jobs;
    }
    if (given("--out")) {
        spec.out = f.out;
    }
    spec.validate();
    return spec;
}

int cmd_tune(const ExperimentSpec& spec) {
    const auto problem = build_problem(spec);
    log(Level::info, "space has " + std::to_string(problem.space.size()) + " configurations");
    const auto result = run_experiment(spec, problem, [](const std::string& m) { log(Level::info, m); });
    write_experiment(spec, problem, result);
    for (const auto& report : aggregate(result)) {
        for (const auto& w : report.warnings) {
            log(Level::warn, report.algorithm + ": " + w);
        }
        if (!report.per_iteration.empty()) {
            std::cout << report.algorithm << ": final median distance "
                      << format_number(report.per_iteration.back().median) << '\n';
        }
    }
    if (result.measurement_failed) {
        log(Level::error, "a run produced no successful measurement");
        return kMeasurement;
    }
    return kOk;
}

int cmd_overhead(ExperimentSpec spec) {
    spec.algorithms = {"bo4co"};
    const auto problem = build_problem(spec);
    const auto result = run_experiment(spec, problem, [](const std::string& m) { log(Level::info, m); });
    std::filesystem::create_directories(spec.out);
    std::ofstream f(std::filesystem::path(spec.out) / "overhead.csv");
    write_overhead_csv(f, result.runs);
    write_overhead_csv(std::cout, result.runs);
    return result.measurement_failed ? kMeasurement : kOk;
}

int cmd_screen(const std::string& dataset_path, const std::string& space_path, std::size_t max_subset,
               const std::string& out) {
    if (!std::filesystem::is_regular_file(dataset_path)) {
        throw ConfigError("dataset '" + dataset_path + "' does not exist");
    }
    const auto space = space_path.empty() ? infer_space(dataset_path) : load_space_declaration(space_path);
    const auto data = load_dataset(dataset_path, space);
    if (data.row_count() == 0) {
        throw ConfigError("dataset is empty");
    }
    const auto ranking = rank_subsets(data, std::min(max_subset, space.dims()));
    std::vector<std::pair<std::string, std::vector<double>>> families;
    for (auto i : data.covered()) {
        const auto x = space.point_at(i);
        families.emplace_back(space.describe(x), data.replicates(x));
    }
    std::vector<std::string> warnings;
    const auto rows = snr(families, &warnings);
    if (!warnings.empty()) {
        log(Level::warn, std::to_string(warnings.size()) + " configurations have a single replicate; no SNR");
        for (const auto& w : warnings) {
            log(Level::debug, w);
        }
    }
    std::cout << "merit ranking (" << ranking.size() << " subsets)\n";
    write_merit_csv(std::cout, space, ranking);
    std::cout << "\nsignal-to-noise\n";
    write_snr_csv(std::cout, rows);
    if (!out.empty()) {
        std::filesystem::create_directories(out);
        std::ofstream m(std::filesystem::path(out) / "merit.csv");
        write_merit_csv(m, space, ranking);
        std::ofstream s(std::filesystem::path(out) / "snr.csv");
        write_snr_csv(s, rows);
    }
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Configuration auto-tuning with Gaussian-process surrogates"};
    app.require_subcommand(1);

    Flags tune_flags;
    auto* tune = app.add_subcommand("tune", "Run algorithms x replications and write traces and reports");
    add_spec_flags(tune, tune_flags);

    Flags overhead_flags;
    auto* overhead = app.add_subcommand("overhead", "Per-iteration model overhead of the GP tuner");
    add_spec_flags(overhead, overhead_flags);

    std::string screen_dataset;
    std::string screen_space;
    std::string screen_out;
    std::size_t max_subset = 3;
    auto* screen = app.add_subcommand("screen", "Merit ranking and signal-to-noise table of a dataset");
    screen->add_option("--dataset", screen_dataset, "Measurement CSV")->required();
    screen->add_option("--space", screen_space, "Space declaration");
    screen->add_option("--max-subset", max_subset, "Largest subset size to rank");
    screen->add_option("--out", screen_out, "Directory for merit.csv and snr.csv");

    std::string agg_dir;
    auto* agg = app.add_subcommand("aggregate", "Rebuild aggregate.csv from the trace files of a run");
    agg->add_option("--out", agg_dir, "Output directory of a tune run")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (*tune) {
            return cmd_tune(build_spec(*tune, tune_flags));
        }
        if (*overhead) {
            return cmd_overhead(build_spec(*overhead, overhead_flags));
        }
        if (*screen) {
            return cmd_screen(screen_dataset, screen_space, max_subset, screen_out);
        }
        if (*agg) {
            const auto text = reaggregate(agg_dir);
            std::ofstream f(std::filesystem::path(agg_dir) / "aggregate.csv");
            f << text;
            return kOk;
        }
    } catch (const MeasurementError& e) {
        log(Level::error, e.what());
        return kMeasurement;
    } catch (const Error& e) {
        log(Level::error, e.what());
        return kConfig;
    } catch (const std::exception& e) {
        log(Level::error, e.what());
        return 1;
    }
    return kOk;
}
