#include <doctest.h>

#include <cmath>
#include <numbers>

#include "autotune/acquisition.hpp"
#include "autotune/errors.hpp"
#include "support.hpp"

using namespace autotune;
using namespace testsupport;

namespace {

// Brute-force argmin of mean - kappa * sd over unobserved points.
std::size_t scan(const GpModel& m, const std::vector<bool>& observed, double kappa, bool ignore_mean = false) {
    const auto& space = m.features().space();
    double best = INFINITY;
    std::size_t arg = 0;
    for (std::size_t i = 0; i < space.size(); ++i) {
        if (observed[i]) {
            continue;
        }
        const auto p = m.predict(space.point_at(i));
        const double v = (ignore_mean ? 0.0 : p.mean) - kappa * std::sqrt(p.variance);
        if (v < best) {
            best = v;
            arg = i;
        }
    }
    return arg;
}

}  // namespace

TEST_SUITE("acquisition") {

TEST_CASE("lcb examples") {
    CHECK(lcb(5.0, 1.0, 2.0) == 3.0);
    CHECK(lcb(5.0, 1.0, 0.0) == 5.0);
    CHECK(lcb(5.0, 0.0, 9.0) == 5.0);
}

TEST_CASE("zeta values") {
    CHECK(riemann_zeta(2) == doctest::Approx(std::numbers::pi * std::numbers::pi / 6).epsilon(1e-13));
    CHECK(riemann_zeta(4) == doctest::Approx(std::pow(std::numbers::pi, 4) / 90).epsilon(1e-13));
    CHECK(riemann_zeta(3) == doctest::Approx(1.2020569031595942).epsilon(1e-13));
    CHECK_THROWS_AS(riemann_zeta(1), ScheduleError);
}

TEST_CASE("kappa schedules") {
    CHECK(kappa_at(KappaSchedule::constant(2.5), 1) == 2.5);
    CHECK(kappa_at(KappaSchedule::constant(2.5), 1000) == 2.5);
    const auto s = KappaSchedule::adaptive(0.5, 2, 2880);
    const double want = std::sqrt(2 * std::log(2880 * (std::numbers::pi * std::numbers::pi / 6) / 0.5));
    CHECK(kappa_at(s, 1) == doctest::Approx(want).epsilon(1e-12));
    CHECK(kappa_at(s, 1) == doctest::Approx(4.28).epsilon(1e-2 / 4.28));
    for (std::size_t t = 1; t < 500; ++t) {
        REQUIRE(kappa_at(s, t + 1) > kappa_at(s, t));
    }
    const auto r3 = KappaSchedule::adaptive(0.5, 3, 2880);
    for (std::size_t t = 2; t < 100; ++t) {
        REQUIRE(kappa_at(r3, t) > kappa_at(s, t));
    }
    CHECK_THROWS_AS(kappa_at(s, 0), ScheduleError);
}

TEST_CASE("schedule validation") {
    CHECK_THROWS_AS(KappaSchedule::adaptive(0.0, 2, 10).validate(), ScheduleError);
    CHECK_THROWS_AS(KappaSchedule::adaptive(1.0, 2, 10).validate(), ScheduleError);
    CHECK_THROWS_AS(KappaSchedule::adaptive(0.1, 1, 10).validate(), ScheduleError);
    CHECK_THROWS_AS(KappaSchedule::constant(-1.0).validate(), ScheduleError);
    CHECK_THROWS_AS(KappaSchedule::adaptive(0.1, 2, 0).validate(), ScheduleError);
}

TEST_CASE("forced choice and exhaustion") {
    Rng rng(2);
    auto inst = random_instance(rng, 5, 2, 1e-3, 1e-2);
    const auto m = GpModel::fit(inst.features, inst.obs, inst.hyper);
    const auto& space = inst.features->space();
    std::vector<bool> observed(space.size(), true);
    observed[3] = false;
    CHECK(select_next(m, space, observed, 2.0) == space.point_at(3));
    observed[3] = true;
    CHECK_THROWS_AS(select_next(m, space, observed, 2.0), ExhaustedError);
    CHECK_THROWS_AS(select_next(m, space, std::vector<bool>(2), 2.0), ContractViolation);
}

TEST_CASE("kappa zero picks the posterior mean minimizer") {
    const auto space = numeric_grid({9});
    const auto f = std::make_shared<const FeatureMap>(space);
    ObservationSet obs;
    obs.add(ConfigPoint{{0}}, 5.0);
    obs.add(ConfigPoint{{4}}, 1.0);
    obs.add(ConfigPoint{{8}}, 5.0);
    Hyperparams h;
    h.kernel = {KernelFamily::matern12, 2.0, {0.5}};
    h.mean.offset = 4.0;
    const auto m = GpModel::fit(f, obs, h);
    std::vector<bool> observed(space.size(), false);
    observed[0] = observed[4] = observed[8] = true;
    const auto x = select_next(m, space, observed, 0.0);
    CHECK(space.linear_index(x) == scan(m, observed, 0.0));
    CHECK((x.coords[0] == 3 || x.coords[0] == 5));
}

TEST_CASE("selection matches a brute-force scan") {
    Rng rng(9);
    for (int trial = 0; trial < 30; ++trial) {
        auto inst = random_instance(rng, 12, 4, 1e-4, 1e-1);
        const auto m = GpModel::fit(inst.features, inst.obs, inst.hyper);
        const auto& space = inst.features->space();
        std::vector<bool> observed(space.size(), false);
        for (const auto& x : inst.obs.points) {
            observed[space.linear_index(x)] = true;
        }
        if (std::all_of(observed.begin(), observed.end(), [](bool b) { return b; })) {
            continue;
        }
        const double kappa = uniform(rng, 0, 5);
        const auto x = select_next(m, space, observed, kappa);
        REQUIRE_FALSE(observed[space.linear_index(x)]);
        const auto want = scan(m, observed, kappa);
        const auto pw = m.predict(space.point_at(want));
        const auto pg = m.predict(x);
        // Equal index, or an exact tie in criterion value.
        REQUIRE(lcb(pg.mean, std::sqrt(pg.variance), kappa) ==
                doctest::Approx(lcb(pw.mean, std::sqrt(pw.variance), kappa)).epsilon(1e-12));
        const auto explore = select_next(m, space, observed, kappa, Criterion::exploration_only);
        const auto pe = m.predict(explore);
        const auto we = m.predict(space.point_at(scan(m, observed, kappa, true)));
        REQUIRE(pe.variance == doctest::Approx(we.variance).epsilon(1e-12));
    }
}

TEST_CASE("mean shift leaves the choice unchanged") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = random_instance(rng, 10, 3, 1e-3, 1e-1);
        const auto& space = inst.features->space();
        std::vector<bool> observed(space.size(), false);
        for (const auto& x : inst.obs.points) {
            observed[space.linear_index(x)] = true;
        }
        if (std::all_of(observed.begin(), observed.end(), [](bool b) { return b; })) {
            continue;
        }
        const auto a = GpModel::fit(inst.features, inst.obs, inst.hyper);
        auto shifted_obs = inst.obs;
        auto shifted_hyper = inst.hyper;
        for (auto& y : shifted_obs.y) {
            y += 64.0;
        }
        shifted_hyper.mean.offset += 64.0;
        const auto b = GpModel::fit(inst.features, shifted_obs, shifted_hyper);
        REQUIRE(select_next(a, space, observed, 1.5) == select_next(b, space, observed, 1.5));
    }
}

TEST_CASE("large kappa approaches maximum variance") {
    Rng rng(19);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = random_instance(rng, 10, 3, 1e-3, 1e-1);
        const auto& space = inst.features->space();
        std::vector<bool> observed(space.size(), false);
        for (const auto& x : inst.obs.points) {
            observed[space.linear_index(x)] = true;
        }
        if (std::all_of(observed.begin(), observed.end(), [](bool b) { return b; })) {
            continue;
        }
        const auto m = GpModel::fit(inst.features, inst.obs, inst.hyper);
        const auto x = select_next(m, space, observed, 1e6);
        double max_var = 0;
        for (std::size_t i = 0; i < space.size(); ++i) {
            if (!observed[i]) {
                max_var = std::max(max_var, m.predict(space.point_at(i)).variance);
            }
        }
        REQUIRE(m.predict(x).variance == doctest::Approx(max_var).epsilon(1e-9));
    }
}

TEST_CASE("observed points given as a list") {
    const auto space = numeric_grid({4});
    const auto f = std::make_shared<const FeatureMap>(space);
    ObservationSet obs;
    obs.add(ConfigPoint{{0}}, 1.0);
    Hyperparams h;
    h.kernel = {KernelFamily::matern12, 1.0, {1.0}};
    const auto m = GpModel::fit(f, obs, h);
    const auto x = select_next(m, space, std::vector<ConfigPoint>{ConfigPoint{{0}}}, 1.0);
    CHECK(x != ConfigPoint{{0}});
}

}
