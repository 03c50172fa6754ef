#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "autotune/acquisition.hpp"
#include "autotune/benchfn.hpp"
#include "autotune/gp.hpp"
#include "autotune/space.hpp"

namespace autotune {

struct BudgetConfig {
    std::size_t max_evaluations = 100;  // N_max
    std::size_t initial_design = 9;     // n
    std::size_t learn_cycle = 10;       // N_l
    int restarts = 3;
    std::uint64_t seed = 0;

    // n = max(d + 1, 9) capped by N_max, N_l = 10, 3 restarts.
    static BudgetConfig defaults(const ConfigSpace& space, std::size_t max_evaluations, std::uint64_t seed);
    void validate(const ConfigSpace& space) const;
};

struct TunerOptions {
    KernelFamily kernel = KernelFamily::product_mixed;
    MeanForm mean = MeanForm::constant;
    KappaSchedule kappa;  // adaptive schedules pick up |X| from the space
    Criterion criterion = Criterion::lcb;
    bool learn_noise = true;
    double noise_variance = 1e-8;  // used when learn_noise is false
};

struct TraceRecord {
    std::size_t t = 0;
    ConfigPoint point;
    double y = 0.0;     // +inf for failed measurements
    double kappa = 0.0;  // NaN outside the model-guided loop
    double best = 0.0;
    double overhead_ms = 0.0;  // model refit + selection; not part of the trace identity
};

struct RunTrace {
    std::string algorithm;
    std::uint64_t seed = 0;
    std::vector<TraceRecord> records;
    ConfigPoint best_point;
    double best_y = 0.0;
    std::optional<Hyperparams> hyper;
    std::size_t failures = 0;

    [[nodiscard]] std::vector<double> best_curve() const;
    // Equality ignoring wall-clock overheads.
    [[nodiscard]] bool same_outcome(const RunTrace& other) const;
};

// Sequential model-based search: LHD bootstrap, GP fit, then LCB-guided
// evaluations with periodic hyperparameter learning. Never measures a
// configuration twice; stops early when the grid is exhausted.
RunTrace run_bo4co(const ConfigSpace& space, ResponseSource& source, const BudgetConfig& budget,
                   const TunerOptions& options);

enum class Baseline { sa, hill, ps, drift, random };

std::string to_string(Baseline b);
Baseline parse_baseline(const std::string& name);

struct BaselineOptions {
    double sa_cooling = 0.95;
    double sa_initial_acceptance = 0.8;
    std::size_t sa_probe_moves = 5;
    double drift_rate = 0.3;
    // Consecutive revisits (served from cache) before a random jump.
    std::size_t max_free_moves = 200;
};

RunTrace run_baseline(Baseline kind, const ConfigSpace& space, ResponseSource& source, const BudgetConfig& budget,
                      const BaselineOptions& options = {});

}  // namespace autotune
