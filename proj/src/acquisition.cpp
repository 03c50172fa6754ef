#include "autotune/acquisition.hpp"

#include <cmath>
#include <limits>

#include "autotune/errors.hpp"

namespace autotune {

KappaSchedule KappaSchedule::constant(double kappa) {
    KappaSchedule s;
    s.mode = KappaMode::constant;
    s.kappa = kappa;
    s.validate();
    return s;
}

KappaSchedule KappaSchedule::adaptive(double epsilon, int r, std::size_t space_size) {
    KappaSchedule s;
    s.mode = KappaMode::adaptive;
    s.epsilon = epsilon;
    s.r = r;
    s.space_size = space_size;
    s.validate();
    return s;
}

void KappaSchedule::validate() const {
    if (mode == KappaMode::constant) {
        if (!(kappa >= 0.0) || !std::isfinite(kappa)) {
            throw ScheduleError("constant kappa must be finite and nonnegative");
        }
        return;
    }
    if (!(epsilon > 0.0 && epsilon < 1.0)) {
        throw ScheduleError("adaptive kappa needs 0 < epsilon < 1");
    }
    if (r < 2) {
        throw ScheduleError("adaptive kappa needs r >= 2");
    }
    if (space_size < 1) {
        throw ScheduleError("adaptive kappa needs a nonempty space");
    }
}

double riemann_zeta(int r) {
    if (r < 2) {
        throw ScheduleError("zeta(r) diverges for r < 2");
    }
    const double s = r;
    constexpr int kTerms = 64;
    double sum = 0.0;
    for (int n = kTerms - 1; n >= 1; --n) {
        sum += std::pow(static_cast<double>(n), -s);
    }
    const double big_n = kTerms;
    const double tail = std::pow(big_n, 1.0 - s) / (s - 1.0) + 0.5 * std::pow(big_n, -s) +
                        s / 12.0 * std::pow(big_n, -s - 1.0) -
                        s * (s + 1.0) * (s + 2.0) / 720.0 * std::pow(big_n, -s - 3.0) +
                        s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) / 30240.0 * std::pow(big_n, -s - 5.0);
    return sum + tail;
}

double kappa_at(const KappaSchedule& schedule, std::size_t t) {
    schedule.validate();
    if (t < 1) {
        throw ScheduleError("kappa schedule starts at t = 1");
    }
    if (schedule.mode == KappaMode::constant) {
        return schedule.kappa;
    }
    // log(|X| zeta(r) t^r / eps) expanded to stay finite for large t.
    const double arg = std::log(static_cast<double>(schedule.space_size)) + std::log(riemann_zeta(schedule.r)) +
                       schedule.r * std::log(static_cast<double>(t)) - std::log(schedule.epsilon);
    if (!(arg > 0.0)) {
        throw ScheduleError("kappa schedule argument of log must exceed 1");
    }
    return std::sqrt(2.0 * arg);
}

ConfigPoint select_next(const GpModel& model, const ConfigSpace& space, const std::vector<bool>& observed,
                        double kappa, Criterion criterion) {
    if (observed.size() != space.size()) {
        throw ContractViolation("observed mask does not match the space size");
    }
    const auto& grid = model.features().grid();
    if (static_cast<std::size_t>(grid.rows()) != space.size()) {
        throw ContractViolation("model was built for a different space");
    }
    std::vector<Eigen::Index> open;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        if (!observed[i]) {
            open.push_back(static_cast<Eigen::Index>(i));
        }
    }
    if (open.empty()) {
        throw ExhaustedError("every configuration has been observed");
    }
    Eigen::MatrixXd queries(static_cast<Eigen::Index>(open.size()), grid.cols());
    for (std::size_t i = 0; i < open.size(); ++i) {
        queries.row(static_cast<Eigen::Index>(i)) = grid.row(open[i]);
    }
    Eigen::VectorXd mean;
    Eigen::VectorXd variance;
    model.predict_batch(queries, mean, variance);

    double best = std::numeric_limits<double>::infinity();
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < open.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        const double sd = std::sqrt(variance(row));
        const double score = criterion == Criterion::lcb ? lcb(mean(row), sd, kappa) : lcb(0.0, sd, kappa);
        // Strict comparison keeps the smallest index among ties.
        if (score < best || (i == 0 && !(score >= best))) {
            best = score;
            best_i = i;
        }
    }
    return space.point_at(static_cast<std::size_t>(open[best_i]));
}

ConfigPoint select_next(const GpModel& model, const ConfigSpace& space, const std::vector<ConfigPoint>& observed,
                        double kappa, Criterion criterion) {
    std::vector<bool> mask(space.size(), false);
    for (const auto& x : observed) {
        mask[space.linear_index(x)] = true;
    }
    return select_next(model, space, mask, kappa, criterion);
}

}  // namespace autotune
