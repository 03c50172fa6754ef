#include "autotune/tuner.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>

#include "autotune/design.hpp"
#include "autotune/errors.hpp"

namespace autotune {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
    return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

// Shared budget bookkeeping: caches every measured value, retries a failed
// measurement once, and appends one trace record per consumed evaluation.
class Evaluator {
public:
    Evaluator(const ConfigSpace& space, ResponseSource& source, std::size_t budget, RunTrace& trace)
        : space_(space), source_(source), limit_(std::min(budget, space.size())), trace_(trace),
          cache_(space.size(), kNaN), measured_(space.size(), false) {}

    [[nodiscard]] bool exhausted() const noexcept { return trace_.records.size() >= limit_; }
    [[nodiscard]] std::size_t used() const noexcept { return trace_.records.size(); }
    [[nodiscard]] bool measured(std::size_t index) const { return measured_[index]; }
    [[nodiscard]] const std::vector<bool>& mask() const noexcept { return measured_; }
    [[nodiscard]] double best() const noexcept { return best_; }
    [[nodiscard]] std::size_t best_index() const noexcept { return best_index_; }

    // Value at x, consuming budget only on first visit. Returns nullopt when
    // x is new but the budget is spent.
    std::optional<double> evaluate(const ConfigPoint& x, double kappa = kNaN, double overhead_ms = 0.0) {
        const auto idx = space_.linear_index(x);
        if (measured_[idx]) {
            return cache_[idx];
        }
        if (exhausted()) {
            return std::nullopt;
        }
        double y = kInf;
        for (int attempt = 0; attempt < 2; ++attempt) {
            try {
                y = source_.measure(x);
                if (std::isnan(y)) {
                    y = kInf;
                    continue;
                }
                break;
            } catch (const MeasurementError&) {
                y = kInf;
            }
        }
        if (y == kInf) {
            ++trace_.failures;
        }
        measured_[idx] = true;
        cache_[idx] = y;
        if (y < best_) {
            best_ = y;
            best_index_ = idx;
        }
        trace_.records.push_back({trace_.records.size() + 1, x, y, kappa, best_, overhead_ms});
        return y;
    }

    // Uniformly chosen unmeasured point; nullopt if the grid is exhausted.
    std::optional<ConfigPoint> random_unmeasured(Rng& rng) const {
        const auto remaining = space_.size() - std::count(measured_.begin(), measured_.end(), true);
        if (remaining == 0) {
            return std::nullopt;
        }
        std::uniform_int_distribution<std::size_t> pick(0, static_cast<std::size_t>(remaining) - 1);
        auto k = pick(rng);
        for (std::size_t i = 0; i < measured_.size(); ++i) {
            if (!measured_[i] && k-- == 0) {
                return space_.point_at(i);
            }
        }
        return std::nullopt;
    }

    void finish() {
        trace_.best_y = best_;
        if (best_ < kInf) {
            trace_.best_point = space_.point_at(best_index_);
        } else if (!trace_.records.empty()) {
            trace_.best_point = trace_.records.front().point;
        }
    }

private:
    const ConfigSpace& space_;
    ResponseSource& source_;
    std::size_t limit_;
    RunTrace& trace_;
    std::vector<double> cache_;
    std::vector<bool> measured_;
    double best_ = kInf;
    std::size_t best_index_ = 0;
};

ObservationSet finite_observations(const RunTrace& trace) {
    ObservationSet obs;
    for (const auto& r : trace.records) {
        if (std::isfinite(r.y)) {
            obs.add(r.point, r.y);
        }
    }
    return obs;
}

}  // namespace

BudgetConfig BudgetConfig::defaults(const ConfigSpace& space, std::size_t max_evaluations, std::uint64_t seed) {
    BudgetConfig b;
    b.max_evaluations = max_evaluations;
    b.initial_design = std::min({std::max<std::size_t>(space.dims() + 1, 9), max_evaluations, space.size()});
    b.learn_cycle = 10;
    b.restarts = 3;
    b.seed = seed;
    return b;
}

void BudgetConfig::validate(const ConfigSpace& space) const {
    if (max_evaluations < 1) {
        throw ConfigError("budget must allow at least one evaluation");
    }
    if (initial_design < 1 || initial_design > max_evaluations || initial_design > space.size()) {
        throw ConfigError("initial design size must be in [1, min(budget, |X|)]");
    }
    if (learn_cycle < 1) {
        throw ConfigError("learning cycle must be >= 1");
    }
    if (restarts < 1) {
        throw ConfigError("learner restarts must be >= 1");
    }
}

std::vector<double> RunTrace::best_curve() const {
    std::vector<double> curve;
    curve.reserve(records.size());
    for (const auto& r : records) {
        curve.push_back(r.best);
    }
    return curve;
}

bool RunTrace::same_outcome(const RunTrace& other) const {
    if (algorithm != other.algorithm || seed != other.seed || records.size() != other.records.size() ||
        best_point != other.best_point || failures != other.failures) {
        return false;
    }
    if (!(best_y == other.best_y)) {
        return false;
    }
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& a = records[i];
        const auto& b = other.records[i];
        const bool kappa_equal = (std::isnan(a.kappa) && std::isnan(b.kappa)) || a.kappa == b.kappa;
        if (a.t != b.t || a.point != b.point || !(a.y == b.y) || !kappa_equal || !(a.best == b.best)) {
            return false;
        }
    }
    return true;
}

RunTrace run_bo4co(const ConfigSpace& space, ResponseSource& source, const BudgetConfig& budget,
                   const TunerOptions& options) {
    budget.validate(space);
    KappaSchedule schedule = options.kappa;
    if (schedule.mode == KappaMode::adaptive) {
        schedule.space_size = space.size();
    }
    schedule.validate();

    RunTrace trace;
    trace.algorithm = "bo4co";
    trace.seed = budget.seed;
    Rng rng(budget.seed);
    Evaluator eval(space, source, budget.max_evaluations, trace);

    const auto design = lhd_sample(space, budget.initial_design, rng);
    for (const auto& x : design.points) {
        eval.evaluate(x);
    }

    const auto features = std::make_shared<const FeatureMap>(space);
    const LearnOptions learn{options.learn_noise, 1e-8, 100};
    ObservationSet obs = finite_observations(trace);
    Hyperparams hyper = default_hyperparams(*features, obs, options.kernel, options.mean);
    if (!options.learn_noise) {
        hyper.noise_variance = options.noise_variance;
    }
    auto relearn = [&]() {
        if (obs.size() < 2) {
            return;
        }
        try {
            hyper = learn_hyperparams(features, obs, hyper, budget.restarts, rng, learn);
        } catch (const LearningError&) {
            // keep the previous hyperparameters
        }
    };
    auto refit = [&]() -> std::optional<GpModel> {
        try {
            return obs.size() == 0 ? GpModel::prior(features, hyper) : GpModel::fit(features, obs, hyper);
        } catch (const ConditioningError&) {
            return std::nullopt;
        }
    };

    relearn();
    std::optional<GpModel> model = refit();
    if (!model) {
        model = GpModel::prior(features, hyper);
    }
    bool explore_next = false;

    while (!eval.exhausted()) {
        const auto started = Clock::now();
        const std::size_t t = eval.used() + 1;
        if (t % budget.learn_cycle == 0) {
            relearn();
            if (auto fresh = refit()) {
                model = std::move(fresh);
            } else {
                explore_next = true;
            }
        }
        const double kappa = kappa_at(schedule, t);
        ConfigPoint x;
        try {
            x = select_next(*model, space, eval.mask(), kappa,
                            explore_next ? Criterion::exploration_only : options.criterion);
        } catch (const ExhaustedError&) {
            break;
        }
        explore_next = false;
        double overhead = elapsed_ms(started);

        // The refit belongs to this iteration's overhead; record it afterwards.
        const auto y = eval.evaluate(x, kappa, overhead);
        const auto refit_started = Clock::now();
        if (y && std::isfinite(*y)) {
            obs.add(x, *y);
            try {
                model = model->refit_with(x, *y);
            } catch (const ConditioningError&) {
                explore_next = true;
            }
        }
        trace.records.back().overhead_ms += elapsed_ms(refit_started);
    }

    trace.hyper = model->hyper();
    eval.finish();
    return trace;
}

std::string to_string(Baseline b) {
    switch (b) {
        case Baseline::sa:
            return "sa";
        case Baseline::hill:
            return "hill";
        case Baseline::ps:
            return "ps";
        case Baseline::drift:
            return "drift";
        case Baseline::random:
            return "random";
    }
    return "unknown";
}

Baseline parse_baseline(const std::string& name) {
    for (auto b : {Baseline::sa, Baseline::hill, Baseline::ps, Baseline::drift, Baseline::random}) {
        if (to_string(b) == name) {
            return b;
        }
    }
    throw ConfigError("unknown algorithm '" + name + "'");
}

namespace {

void run_random(const ConfigSpace& space, Evaluator& eval, Rng& rng) {
    std::vector<std::size_t> order(space.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    for (auto i : order) {
        if (eval.exhausted()) {
            break;
        }
        eval.evaluate(space.point_at(i));
    }
}

void run_sa(const ConfigSpace& space, Evaluator& eval, Rng& rng, const BaselineOptions& opt) {
    auto start = eval.random_unmeasured(rng);
    if (!start) {
        return;
    }
    ConfigPoint x = *start;
    double fx = *eval.evaluate(x);

    // Calibrate T0 from a few probe moves so uphill moves are initially
    // accepted with the requested probability.
    auto neighbors = space.neighborhood(x, 1);
    std::shuffle(neighbors.begin(), neighbors.end(), rng);
    double uphill = 0.0;
    std::size_t uphill_count = 0;
    double spread = 0.0;
    std::size_t probes = 0;
    for (const auto& n : neighbors) {
        if (probes >= opt.sa_probe_moves || eval.exhausted()) {
            break;
        }
        const auto fy = eval.evaluate(n);
        if (!fy || !std::isfinite(*fy) || !std::isfinite(fx)) {
            continue;
        }
        ++probes;
        spread += std::abs(*fy - fx);
        if (*fy > fx) {
            uphill += *fy - fx;
            ++uphill_count;
        }
    }
    double mean_delta = uphill_count > 0 ? uphill / static_cast<double>(uphill_count)
                                         : (probes > 0 ? spread / static_cast<double>(probes) : 1.0);
    if (!(mean_delta > 0.0)) {
        mean_delta = 1.0;
    }
    const double t0 = -mean_delta / std::log(opt.sa_initial_acceptance);

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t free_moves = 0;
    while (!eval.exhausted()) {
        const double temperature = std::max(t0 * std::pow(opt.sa_cooling, static_cast<double>(eval.used())), 1e-300);
        const auto near = space.neighborhood(x, 1);
        if (near.empty()) {
            return;
        }
        std::uniform_int_distribution<std::size_t> pick(0, near.size() - 1);
        const auto& y = near[pick(rng)];
        const bool fresh = !eval.measured(space.linear_index(y));
        const double fy = *eval.evaluate(y);
        free_moves = fresh ? 0 : free_moves + 1;
        const bool accept =
            fy < fx || (std::isfinite(fy) && unit(rng) < std::exp(-(fy - fx) / temperature));
        if (accept) {
            x = y;
            fx = fy;
        }
        if (free_moves >= opt.max_free_moves) {
            auto jump = eval.random_unmeasured(rng);
            if (!jump) {
                return;
            }
            x = *jump;
            fx = *eval.evaluate(x);
            free_moves = 0;
        }
    }
}

void run_hill(const ConfigSpace& space, Evaluator& eval, Rng& rng) {
    auto start = eval.random_unmeasured(rng);
    if (!start) {
        return;
    }
    ConfigPoint x = *start;
    double fx = *eval.evaluate(x);
    while (!eval.exhausted()) {
        ConfigPoint best = x;
        double fbest = fx;
        for (const auto& y : space.neighborhood(x, 1)) {
            const auto fy = eval.evaluate(y);
            if (!fy) {
                break;
            }
            if (*fy < fbest) {
                best = y;
                fbest = *fy;
            }
        }
        if (fbest < fx) {
            x = best;
            fx = fbest;
            continue;
        }
        // Local minimum: restart somewhere new.
        auto jump = eval.random_unmeasured(rng);
        if (!jump) {
            return;
        }
        x = *jump;
        fx = *eval.evaluate(x);
    }
}

std::vector<std::size_t> initial_steps(const ConfigSpace& space) {
    std::vector<std::size_t> steps;
    for (const auto& p : space.params()) {
        steps.push_back(std::max<std::size_t>(1, p.size() / 4));
    }
    return steps;
}

void run_ps(const ConfigSpace& space, Evaluator& eval, Rng& rng) {
    auto start = eval.random_unmeasured(rng);
    if (!start) {
        return;
    }
    ConfigPoint x = *start;
    double fx = *eval.evaluate(x);
    auto steps = initial_steps(space);
    std::size_t free_polls = 0;
    while (!eval.exhausted()) {
        const auto used_before = eval.used();
        ConfigPoint best = x;
        double fbest = fx;
        for (std::size_t l = 0; l < space.dims() && !eval.exhausted(); ++l) {
            const auto m = space.params()[l].size();
            for (int sign : {-1, 1}) {
                ConfigPoint y = x;
                if (sign < 0) {
                    y.coords[l] = x.coords[l] >= steps[l] ? x.coords[l] - steps[l] : 0;
                } else {
                    y.coords[l] = std::min(m - 1, x.coords[l] + steps[l]);
                }
                if (y == x) {
                    continue;
                }
                const auto fy = eval.evaluate(y);
                if (fy && *fy < fbest) {
                    best = y;
                    fbest = *fy;
                }
            }
        }
        free_polls = eval.used() == used_before ? free_polls + 1 : 0;
        if (fbest < fx) {
            x = best;
            fx = fbest;
            continue;
        }
        const bool minimal = std::all_of(steps.begin(), steps.end(), [](std::size_t s) { return s == 1; });
        if (!minimal && free_polls < 64) {
            for (auto& s : steps) {
                s = std::max<std::size_t>(1, s / 2);
            }
            continue;
        }
        auto jump = eval.random_unmeasured(rng);
        if (!jump) {
            return;
        }
        x = *jump;
        fx = *eval.evaluate(x);
        steps = initial_steps(space);
        free_polls = 0;
    }
}

void run_drift(const ConfigSpace& space, Evaluator& eval, Rng& rng, const BaselineOptions& opt) {
    auto start = eval.random_unmeasured(rng);
    if (!start) {
        return;
    }
    const auto d = space.dims();
    std::vector<double> center(d);
    for (std::size_t l = 0; l < d; ++l) {
        center[l] = static_cast<double>(start->coords[l]);
    }
    eval.evaluate(*start);
    while (!eval.exhausted()) {
        std::optional<ConfigPoint> next;
        for (int attempt = 0; attempt < 20 && !next; ++attempt) {
            ConfigPoint y;
            y.coords.resize(d);
            for (std::size_t l = 0; l < d; ++l) {
                const auto m = static_cast<double>(space.params()[l].size());
                const double half = std::max(1.0, m / 4.0);
                std::uniform_real_distribution<double> u(center[l] - half, center[l] + half);
                const double v = std::clamp(std::round(u(rng)), 0.0, m - 1.0);
                y.coords[l] = static_cast<std::size_t>(v);
            }
            if (!eval.measured(space.linear_index(y))) {
                next = std::move(y);
            }
        }
        if (!next) {
            next = eval.random_unmeasured(rng);
            if (!next) {
                return;
            }
        }
        eval.evaluate(*next);
        if (eval.best() < kInf) {
            const auto incumbent = space.point_at(eval.best_index());
            for (std::size_t l = 0; l < d; ++l) {
                center[l] += opt.drift_rate * (static_cast<double>(incumbent.coords[l]) - center[l]);
            }
        }
    }
}

}  // namespace

RunTrace run_baseline(Baseline kind, const ConfigSpace& space, ResponseSource& source, const BudgetConfig& budget,
                      const BaselineOptions& options) {
    if (budget.max_evaluations < 1) {
        throw ConfigError("budget must allow at least one evaluation");
    }
    RunTrace trace;
    trace.algorithm = to_string(kind);
    trace.seed = budget.seed;
    Rng rng(budget.seed);
    Evaluator eval(space, source, budget.max_evaluations, trace);
    switch (kind) {
        case Baseline::random:
            run_random(space, eval, rng);
            break;
        case Baseline::sa:
            run_sa(space, eval, rng, options);
            break;
        case Baseline::hill:
            run_hill(space, eval, rng);
            break;
        case Baseline::ps:
            run_ps(space, eval, rng);
            break;
        case Baseline::drift:
            run_drift(space, eval, rng, options);
            break;
    }
    eval.finish();
    return trace;
}

}  // namespace autotune
