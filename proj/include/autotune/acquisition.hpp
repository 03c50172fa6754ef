#pragma once

#include <cstddef>
#include <vector>

#include "autotune/gp.hpp"
#include "autotune/space.hpp"

namespace autotune {

enum class KappaMode { constant, adaptive };

// Exploration weight for the lower confidence bound. The adaptive form is
//   kappa_t = sqrt(2 log(|X| zeta(r) t^r / epsilon)).
struct KappaSchedule {
    KappaMode mode = KappaMode::adaptive;
    double kappa = 0.0;
    double epsilon = 0.1;
    int r = 2;
    std::size_t space_size = 1;

    static KappaSchedule constant(double kappa);
    static KappaSchedule adaptive(double epsilon, int r, std::size_t space_size);

    void validate() const;
};

// Riemann zeta for integer r >= 2 (partial sum plus Euler-Maclaurin tail).
double riemann_zeta(int r);

double kappa_at(const KappaSchedule& schedule, std::size_t t);

inline double lcb(double mean, double stddev, double kappa) { return mean - kappa * stddev; }

enum class Criterion {
    lcb,
    // Ignores the posterior mean (mu_t := 0): picks the largest variance.
    exploration_only,
};

// Unobserved grid point minimizing the criterion; ties go to the smallest
// linear index. `observed` is indexed by linear index. Throws ExhaustedError
// when every point is observed.
ConfigPoint select_next(const GpModel& model, const ConfigSpace& space, const std::vector<bool>& observed,
                        double kappa, Criterion criterion = Criterion::lcb);
ConfigPoint select_next(const GpModel& model, const ConfigSpace& space, const std::vector<ConfigPoint>& observed,
                        double kappa, Criterion criterion = Criterion::lcb);

}  // namespace autotune
