#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "autotune/acquisition.hpp"
#include "autotune/benchfn.hpp"
#include "autotune/gp.hpp"
#include "autotune/keyvalue.hpp"
#include "autotune/tuner.hpp"

namespace autotune {

enum class SourceKind { function, dataset, command };

struct ExperimentSpec {
    SourceKind source = SourceKind::function;
    std::string function = "branin";
    std::vector<std::size_t> grid;  // empty: the function's default grid
    std::string noise = "0";        // sigma, or "replicates" for datasets
    std::string dataset;
    std::string space;    // space declaration, required for commands
    std::string command;

    std::vector<std::string> algorithms{"bo4co"};
    std::optional<std::size_t> budget;        // default 100
    std::optional<std::size_t> init_design;   // default max(d + 1, 9)
    std::size_t learn_cycle = 10;
    int restarts = 3;
    std::string kappa = "adaptive:0.1,2";
    KernelFamily kernel = KernelFamily::product_mixed;
    MeanForm mean = MeanForm::constant;
    std::size_t replications = 1;
    std::uint64_t seed = 0;
    std::size_t jobs = 1;
    std::string out = "out";

    // Throws ConfigError.
    void validate() const;
};

// Key-value run file; keys mirror the long flag names.
ExperimentSpec load_experiment_spec(const std::string& path);
void apply_config(ExperimentSpec& spec, const KeyValueFile& file);

KappaSchedule parse_kappa(const std::string& text, std::size_t space_size);
KernelFamily parse_kernel(const std::string& text);
MeanForm parse_mean(const std::string& text);
std::string to_string(KernelFamily family);
std::string to_string(MeanForm form);
std::vector<std::size_t> parse_grid(const std::string& text);
std::vector<std::string> parse_algorithms(const std::string& text);

struct Problem {
    ConfigSpace space;
    std::unique_ptr<ResponseSource> prototype;  // forked per replication
    std::optional<GroundTruth> truth;           // unknown for external commands
    std::shared_ptr<const TabularDataset> dataset;
};

Problem build_problem(const ExperimentSpec& spec);

BudgetConfig budget_for(const ExperimentSpec& spec, const ConfigSpace& space, std::uint64_t seed);

struct AlgorithmRuns {
    std::string algorithm;
    std::vector<RunTrace> traces;  // by replication index
};

struct ExperimentResult {
    std::vector<AlgorithmRuns> runs;  // in spec.algorithms order
    std::optional<double> ground_truth;
    bool measurement_failed = false;  // some run never got a finite measurement
};

using LogFn = std::function<void(const std::string&)>;

// Runs every algorithm x replication with seed + replication index, at most
// spec.jobs at a time.
ExperimentResult run_experiment(const ExperimentSpec& spec, const Problem& problem, const LogFn& log = {});

RunTrace run_algorithm(const std::string& algorithm, const ExperimentSpec& spec, const Problem& problem,
                       std::uint64_t seed);

}  // namespace autotune
