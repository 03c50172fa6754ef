#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "autotune/errors.hpp"
#include "autotune/gp.hpp"
#include "support.hpp"

using namespace autotune;
using namespace testsupport;

namespace {

std::shared_ptr<const FeatureMap> line_features(std::size_t m, bool standardize = true) {
    return std::make_shared<const FeatureMap>(numeric_grid({m}), standardize);
}

Hyperparams simple_hyper(std::size_t d, double amp, double scale, double noise) {
    Hyperparams h;
    h.kernel.family = KernelFamily::matern12;
    h.kernel.amplitude = amp;
    h.kernel.scales.assign(d, scale);
    h.noise_variance = noise;
    return h;
}

ConfigPoint pt(std::vector<std::size_t> c) { return ConfigPoint{std::move(c)}; }

}  // namespace

TEST_SUITE("gp") {

TEST_CASE("kernel examples") {
    KernelSpec spec{KernelFamily::matern12, 1.0, {1.0}};
    const std::vector<DimKind> numeric{DimKind::numeric};
    Eigen::VectorXd a(1);
    Eigen::VectorXd b(1);
    a << 0.0;
    b << 1.0;
    CHECK(kernel_eval(spec, numeric, a, a) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(kernel_eval(spec, numeric, a, b) == doctest::Approx(0.367879441171442).epsilon(1e-12));

    KernelSpec cat{KernelFamily::categorical_ard, 1.0, {2.0}};
    const std::vector<DimKind> categorical{DimKind::categorical};
    Eigen::VectorXd c0(1);
    Eigen::VectorXd c1(1);
    c0 << 0.0;
    c1 << 3.0;
    CHECK(kernel_eval(cat, categorical, c0, c1) == doctest::Approx(0.135335283236613).epsilon(1e-12));
    CHECK(kernel_eval(cat, categorical, c0, c0) == doctest::Approx(1.0));

    KernelSpec product{KernelFamily::product_mixed, 1.5, {1.0, 2.0}};
    const std::vector<DimKind> mixed{DimKind::numeric, DimKind::categorical};
    Eigen::VectorXd p(2);
    Eigen::VectorXd q(2);
    p << 0.0, 0.0;
    q << 1.0, 1.0;
    CHECK(kernel_eval(product, mixed, p, q) == doctest::Approx(2.25 * std::exp(-3.0)).epsilon(1e-12));
    CHECK_THROWS_AS(kernel_eval(spec, mixed, p, q), ContractViolation);
}

TEST_CASE("kernel matrices are symmetric PSD") {
    Rng rng(11);
    for (int trial = 0; trial < 50; ++trial) {
        auto inst = random_instance(rng, 12, 4, 0, 0);
        const auto& f = *inst.features;
        Eigen::MatrixXd x(static_cast<Eigen::Index>(inst.obs.size()), static_cast<Eigen::Index>(f.dims()));
        for (std::size_t i = 0; i < inst.obs.size(); ++i) {
            x.row(static_cast<Eigen::Index>(i)) = f.encode(inst.obs.points[i]).transpose();
        }
        const auto k = kernel_matrix(inst.hyper.kernel, f.kinds(), x, x);
        REQUIRE((k - k.transpose()).cwiseAbs().maxCoeff() == 0.0);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
        const double amp2 = inst.hyper.kernel.amplitude * inst.hyper.kernel.amplitude;
        REQUIRE(eig.eigenvalues().minCoeff() >= -1e-8 * amp2);
    }
}

TEST_CASE("single observation") {
    const auto f = line_features(5);
    ObservationSet obs;
    obs.add(pt({2}), 5.0);
    auto h = simple_hyper(1, 2.0, 1.0, 0.0);
    h.mean.offset = 1.0;
    const auto m = GpModel::fit(f, obs, h);
    CHECK(m.chol()(0, 0) == doctest::Approx(2.0));
    CHECK(m.alpha()(0) == doctest::Approx((5.0 - 1.0) / 4.0));
}

TEST_CASE("distant points decouple") {
    ConfigSpace s({ParameterDef::categorical("c", {"a", "b", "c"})});
    const auto f = std::make_shared<const FeatureMap>(s);
    ObservationSet obs;
    obs.add(pt({0}), 1.0);
    obs.add(pt({2}), -2.0);
    Hyperparams h;
    h.kernel = {KernelFamily::categorical_ard, 1.0, {60.0}};
    h.noise_variance = 0.5;
    const auto m = GpModel::fit(f, obs, h);
    CHECK(m.alpha()(0) == doctest::Approx(1.0 / 1.5).epsilon(1e-12));
    CHECK(m.alpha()(1) == doctest::Approx(-2.0 / 1.5).epsilon(1e-12));
    const auto far = m.predict(pt({1}));
    CHECK(far.mean == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(far.variance == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("cholesky reconstructs the covariance") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        auto inst = random_instance(rng, 5, 3, 1e-3, 1e-1);
        const auto m = GpModel::fit(inst.features, inst.obs, inst.hyper);
        REQUIRE(m.jitter() == 0.0);
        DenseOracle oracle(*inst.features, inst.obs, inst.hyper);
        Eigen::MatrixXd k(oracle.x.rows(), oracle.x.rows());
        for (Eigen::Index i = 0; i < k.rows(); ++i) {
            for (Eigen::Index j = 0; j < k.cols(); ++j) {
                k(i, j) = kernel_eval(inst.hyper.kernel, inst.features->kinds(), oracle.x.row(i).transpose(),
                                      oracle.x.row(j).transpose());
            }
        }
        k.diagonal().array() += inst.hyper.noise_variance;
        const Eigen::MatrixXd rebuilt = m.chol() * m.chol().transpose();
        REQUIRE((rebuilt - k).norm() / k.norm() < 1e-10);
        REQUIRE(m.chol().diagonal().minCoeff() > 0.0);
    }
}

TEST_CASE("interpolation at zero noise") {
    const auto f = line_features(10);
    ObservationSet obs;
    obs.add(pt({1}), 3.0);
    obs.add(pt({4}), -1.0);
    obs.add(pt({8}), 2.0);
    const auto m = GpModel::fit(f, obs, simple_hyper(1, 1.0, 0.5, 0.0));
    for (std::size_t i = 0; i < obs.size(); ++i) {
        const auto p = m.predict(obs.points[i]);
        CHECK(p.mean == doctest::Approx(obs.y[i]).epsilon(1e-10));
        CHECK(std::abs(p.variance) < 1e-10);
    }
}

TEST_CASE("two-point closed form") {
    const auto f = line_features(11);  // features 0, 0.1, ..., 1
    ObservationSet obs;
    obs.add(pt({0}), 1.0);
    obs.add(pt({10}), 3.0);
    const double amp = 1.3;
    const double ell = 0.7;
    const double noise = 0.01;
    const auto m = GpModel::fit(f, obs, simple_hyper(1, amp, ell, noise));
    const double a2 = amp * amp;
    const double k12 = a2 * std::exp(-1.0 / ell);
    const double q = 0.3;
    const double k1 = a2 * std::exp(-q / ell);
    const double k2 = a2 * std::exp(-(1.0 - q) / ell);
    // [[a, b], [b, a]]^-1 = [[a, -b], [-b, a]] / (a^2 - b^2)
    const double a = a2 + noise;
    const double det = a * a - k12 * k12;
    const double w1 = (a * 1.0 - k12 * 3.0) / det;
    const double w2 = (-k12 * 1.0 + a * 3.0) / det;
    const double mean = k1 * w1 + k2 * w2;
    const double quad = (a * k1 * k1 - 2 * k12 * k1 * k2 + a * k2 * k2) / det;
    const auto p = m.predict(pt({3}));
    CHECK(p.mean == doctest::Approx(mean).epsilon(1e-10));
    CHECK(p.variance == doctest::Approx(a2 + noise - quad).epsilon(1e-10));
}

TEST_CASE("factorized path matches explicit inverse") {
    Rng rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        auto inst = random_instance(rng, 12, 4, 1e-4, 1e-1);
        const auto m = GpModel::fit(inst.features, inst.obs, inst.hyper);
        DenseOracle oracle(*inst.features, inst.obs, inst.hyper);
        const auto& space = inst.features->space();
        for (std::size_t i = 0; i < space.size(); i += std::max<std::size_t>(1, space.size() / 40)) {
            const auto x = space.point_at(i);
            const auto got = m.predict(x);
            const auto want = oracle.predict(inst.features->encode(x));
            REQUIRE(got.mean == doctest::Approx(want.mean).epsilon(1e-8));
            REQUIRE(std::abs(got.variance - std::max(want.variance, 0.0)) < 1e-8);
            REQUIRE(got.variance <= inst.hyper.kernel.amplitude * inst.hyper.kernel.amplitude +
                                        inst.hyper.noise_variance + 1e-9);
        }
        REQUIRE(m.log_marginal_likelihood() == doctest::Approx(oracle.lml()).epsilon(1e-8));
    }
}

TEST_CASE("batch prediction agrees with pointwise prediction") {
    Rng rng(23);
    auto inst = random_instance(rng, 10, 3, 1e-3, 1e-2);
    const auto m = GpModel::fit(inst.features, inst.obs, inst.hyper);
    Eigen::VectorXd mean;
    Eigen::VectorXd var;
    m.predict_batch(inst.features->grid(), mean, var);
    for (std::size_t i = 0; i < inst.features->space().size(); ++i) {
        const auto p = m.predict(inst.features->space().point_at(i));
        REQUIRE(mean(static_cast<Eigen::Index>(i)) == doctest::Approx(p.mean).epsilon(1e-12));
        REQUIRE(var(static_cast<Eigen::Index>(i)) == doctest::Approx(p.variance).epsilon(1e-12));
    }
}

TEST_CASE("prior model") {
    const auto f = line_features(4);
    auto h = simple_hyper(1, 2.0, 1.0, 0.25);
    h.mean.offset = 7.0;
    const auto m = GpModel::prior(f, h);
    const auto p = m.predict(pt({2}));
    CHECK(p.mean == 7.0);
    CHECK(p.variance == doctest::Approx(4.25));
    const auto grown = m.refit_with(pt({1}), 3.0);
    const auto direct = GpModel::fit(f, grown.train(), h);
    CHECK(grown.predict(pt({3})).mean == doctest::Approx(direct.predict(pt({3})).mean).epsilon(1e-12));
}

TEST_CASE("log marginal likelihood of one point") {
    const auto f = line_features(3);
    ObservationSet obs;
    auto h = simple_hyper(1, 1.5, 1.0, 0.2);
    h.mean.offset = 4.0;
    obs.add(pt({1}), 4.0);
    const double v = 1.5 * 1.5 + 0.2;
    CHECK(log_marginal_likelihood(*f, obs, h) == doctest::Approx(-0.5 * std::log(2 * std::numbers::pi * v)));
}

TEST_CASE("log marginal likelihood factorizes for independent points") {
    ConfigSpace s({ParameterDef::categorical("c", {"a", "b", "c"})});
    const auto f = std::make_shared<const FeatureMap>(s);
    ObservationSet obs;
    obs.add(pt({0}), 1.0);
    obs.add(pt({1}), -0.5);
    Hyperparams h;
    h.kernel = {KernelFamily::categorical_ard, 1.2, {80.0}};
    h.noise_variance = 0.1;
    const double v = 1.44 + 0.1;
    const double want = -0.5 * std::log(2 * std::numbers::pi * v) * 2 - 0.5 * (1.0 + 0.25) / v;
    CHECK(log_marginal_likelihood(*f, obs, h) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("predictions ignore training order") {
    Rng rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto inst = random_instance(rng, 10, 3, 1e-3, 1e-1);
        ObservationSet shuffled;
        std::vector<std::size_t> order(inst.obs.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            order[i] = i;
        }
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            shuffled.add(inst.obs.points[i], inst.obs.y[i]);
        }
        const auto a = GpModel::fit(inst.features, inst.obs, inst.hyper);
        const auto b = GpModel::fit(inst.features, shuffled, inst.hyper);
        const auto& space = inst.features->space();
        for (std::size_t i = 0; i < space.size(); ++i) {
            const auto x = space.point_at(i);
            REQUIRE(std::abs(a.predict(x).mean - b.predict(x).mean) < 1e-10);
            REQUIRE(std::abs(a.predict(x).variance - b.predict(x).variance) < 1e-10);
        }
    }
}

TEST_CASE("rank-one refit equals a full fit") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        auto inst = random_instance(rng, 14, 3, 1e-4, 1e-2);
        const auto& space = inst.features->space();
        ObservationSet first;
        first.add(inst.obs.points[0], inst.obs.y[0]);
        auto model = GpModel::fit(inst.features, first, inst.hyper);
        for (std::size_t i = 1; i < inst.obs.size(); ++i) {
            model = model.refit_with(inst.obs.points[i], inst.obs.y[i]);
            ObservationSet prefix;
            for (std::size_t j = 0; j <= i; ++j) {
                prefix.add(inst.obs.points[j], inst.obs.y[j]);
            }
            const auto full = GpModel::fit(inst.features, prefix, inst.hyper);
            for (int probe = 0; probe < 50; ++probe) {
                const auto x = space.point_at(pick(rng, 0, space.size() - 1));
                REQUIRE(std::abs(model.predict(x).mean - full.predict(x).mean) < 1e-8);
                REQUIRE(std::abs(model.predict(x).variance - full.predict(x).variance) < 1e-8);
            }
        }
    }
}

TEST_CASE("refit rejects duplicates") {
    const auto f = line_features(5);
    ObservationSet obs;
    obs.add(pt({1}), 1.0);
    const auto m = GpModel::fit(f, obs, simple_hyper(1, 1.0, 1.0, 0.0));
    CHECK_THROWS_AS((void)m.refit_with(pt({1}), 2.0), ContractViolation);
    CHECK_THROWS_AS(obs.add(pt({1}), 2.0), ContractViolation);
}

TEST_CASE("singular extension takes the jitter path") {
    // With a huge length scale on the second dimension, points differing
    // only there are indistinguishable to the kernel.
    const auto f = std::make_shared<const FeatureMap>(numeric_grid({3, 3}));
    Hyperparams h;
    h.kernel = {KernelFamily::matern12, 1.0, {0.5, 1e17}};
    h.noise_variance = 0.0;
    ObservationSet obs;
    obs.add(pt({0, 0}), 1.0);
    const auto m = GpModel::fit(f, obs, h);
    const auto grown = m.refit_with(pt({0, 2}), 1.0);
    CHECK(grown.jitter() > 0.0);
    CHECK(grown.size() == 2);
}

TEST_CASE("indefinite matrices are reported") {
    Eigen::MatrixXd k(2, 2);
    k << 1.0, 2.0, 2.0, 1.0;
    try {
        (void)detail::factorize_with_jitter(k, 1.0);
        FAIL("expected a conditioning error");
    } catch (const ConditioningError& e) {
        CHECK(e.min_eigenvalue() == doctest::Approx(-1.0).epsilon(1e-9));
    }
}

TEST_CASE("hyperparameter validation") {
    auto h = simple_hyper(2, 1.0, 1.0, 0.0);
    CHECK_NOTHROW(h.validate(2));
    CHECK_THROWS_AS(h.validate(3), ContractViolation);
    h.kernel.amplitude = 0.0;
    CHECK_THROWS_AS(h.validate(2), ContractViolation);
    h = simple_hyper(2, 1.0, 1.0, -1.0);
    CHECK_THROWS_AS(h.validate(2), ContractViolation);
    h = simple_hyper(2, 1.0, 1.0, 0.0);
    h.mean.slopes = {1.0};
    CHECK_THROWS_AS(h.validate(2), ContractViolation);
}

TEST_CASE("analytic gradient matches finite differences") {
    Rng rng(53);
    for (int trial = 0; trial < 25; ++trial) {
        auto inst = random_instance(rng, 12, 4, 1e-2, 1e-1);
        if (inst.obs.size() < 2) {
            continue;
        }
        const LearnOptions opts{trial % 2 == 0, 1e-8, 100};
        LikelihoodObjective objective(inst.features, inst.obs, inst.hyper, opts);
        const Eigen::VectorXd v = objective.pack(inst.hyper);
        Eigen::VectorXd g;
        const double value = objective.evaluate(v, &g);
        REQUIRE(std::isfinite(value));
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double h = 1e-5;
            Eigen::VectorXd up = v;
            Eigen::VectorXd down = v;
            up(i) += h;
            down(i) -= h;
            const double fd = (objective.evaluate(up, nullptr) - objective.evaluate(down, nullptr)) / (2 * h);
            REQUIRE(std::abs(fd - g(i)) <= 1e-4 * std::max({std::abs(fd), std::abs(g(i)), 1.0}));
        }
    }
}

TEST_CASE("profiled objective equals the likelihood at the profiled mean") {
    Rng rng(59);
    auto inst = random_instance(rng, 10, 3, 1e-2, 1e-1);
    while (inst.obs.size() < 4) {
        inst = random_instance(rng, 10, 3, 1e-2, 1e-1);
    }
    LikelihoodObjective objective(inst.features, inst.obs, inst.hyper, {});
    const Eigen::VectorXd v = objective.pack(inst.hyper);
    const auto h = objective.unpack(v);
    CHECK(objective.evaluate(v, nullptr) == doctest::Approx(log_marginal_likelihood(*inst.features, inst.obs, h)));
    // The profiled mean maximizes over the offset.
    auto shifted = h;
    shifted.mean.offset += 0.1;
    CHECK(log_marginal_likelihood(*inst.features, inst.obs, shifted) <
          log_marginal_likelihood(*inst.features, inst.obs, h));
}

TEST_CASE("learning never lowers the likelihood") {
    Rng rng(61);
    for (int trial = 0; trial < 10; ++trial) {
        auto inst = random_instance(rng, 12, 3, 1e-3, 1e-1);
        if (inst.obs.size() < 2) {
            continue;
        }
        const auto learned = learn_hyperparams(inst.features, inst.obs, inst.hyper, 3, rng);
        const double before = log_marginal_likelihood(*inst.features, inst.obs, inst.hyper);
        const double after = log_marginal_likelihood(*inst.features, inst.obs, learned);
        REQUIRE(after >= before - 1e-9);
        // Starting at the optimum with one restart returns it.
        const auto again = learn_hyperparams(inst.features, inst.obs, learned, 1, rng);
        REQUIRE(log_marginal_likelihood(*inst.features, inst.obs, again) >= after - 1e-9);
    }
}

TEST_CASE("learning preconditions") {
    const auto f = line_features(5);
    ObservationSet obs;
    obs.add(pt({0}), 1.0);
    Rng rng(1);
    const auto h = simple_hyper(1, 1.0, 1.0, 0.1);
    CHECK_THROWS_AS(learn_hyperparams(f, obs, h, 3, rng), ContractViolation);
    obs.add(pt({1}), 2.0);
    CHECK_THROWS_AS(learn_hyperparams(f, obs, h, 0, rng), ContractViolation);
}

TEST_CASE("length scale recovery from GP samples") {
    // Raw (unscaled) features so the domain spans many correlation lengths.
    const auto f = line_features(400, false);
    int recovered = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        std::vector<std::size_t> idx(400);
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        idx.resize(30);
        Eigen::MatrixXd x(30, 1);
        for (int i = 0; i < 30; ++i) {
            x(i, 0) = static_cast<double>(idx[static_cast<std::size_t>(i)]) / 10.0;
        }
        KernelSpec truth{KernelFamily::matern12, 1.0, {1.0}};
        const std::vector<DimKind> kinds{DimKind::numeric};
        Eigen::MatrixXd k = kernel_matrix(truth, kinds, x, x);
        k.diagonal().array() += 1e-4;
        const Eigen::MatrixXd l = k.llt().matrixL();
        Eigen::VectorXd z(30);
        std::normal_distribution<double> normal;
        for (int i = 0; i < 30; ++i) {
            z(i) = normal(rng);
        }
        const Eigen::VectorXd y = l * z;
        // Option values are 0..399; scale them to the sampled coordinates.
        ObservationSet obs;
        for (int i = 0; i < 30; ++i) {
            obs.add(pt({idx[static_cast<std::size_t>(i)]}), y(i));
        }
        auto init = default_hyperparams(*f, obs, KernelFamily::matern12, MeanForm::constant);
        init.kernel.scales = {10.0};
        const auto learned = learn_hyperparams(f, obs, init, 3, rng);
        const double theta = learned.kernel.scales[0] / 10.0;
        if (theta > 0.5 && theta < 2.0) {
            ++recovered;
        }
    }
    CHECK(recovered >= 16);
}

TEST_CASE("irrelevant dimension gets the lowest relevance") {
    const auto space = numeric_grid({15, 15});
    const auto f = std::make_shared<const FeatureMap>(space);
    int ranked_last = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng rng(seed);
        ObservationSet obs;
        std::vector<std::size_t> idx(space.size());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            idx[i] = i;
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t i = 0; i < 30; ++i) {
            const auto x = space.point_at(idx[i]);
            const double u = static_cast<double>(x.coords[0]) / 14.0;
            obs.add(x, std::sin(6.0 * u) + 0.5 * u);
        }
        const auto init = default_hyperparams(*f, obs, KernelFamily::matern12, MeanForm::constant);
        const auto learned = learn_hyperparams(f, obs, init, 3, rng);
        // Matern relevance is 1 / length scale.
        if (1.0 / learned.kernel.scales[1] < 1.0 / learned.kernel.scales[0]) {
            ++ranked_last;
        }
    }
    CHECK(ranked_last >= 16);
}

TEST_CASE("linear mean recovers a hyperplane") {
    const auto space = numeric_grid({6, 6});
    const auto f = std::make_shared<const FeatureMap>(space);
    auto plane = [](const ConfigPoint& x) {
        return 3.0 + 2.0 * static_cast<double>(x.coords[0]) - 0.5 * static_cast<double>(x.coords[1]);
    };
    ObservationSet obs;
    for (std::size_t i = 0; i < space.size(); i += 3) {
        obs.add(space.point_at(i), plane(space.point_at(i)));
    }
    auto init = default_hyperparams(*f, obs, KernelFamily::matern12, MeanForm::linear);
    init.noise_variance = 0.0;
    Rng rng(3);
    const auto learned = learn_hyperparams(f, obs, init, 3, rng, {false, 1e-8, 100});
    const auto m = GpModel::fit(f, obs, learned);
    for (std::size_t i = 1; i < space.size(); i += 3) {
        const auto x = space.point_at(i);
        REQUIRE(m.predict(x).mean == doctest::Approx(plane(x)).epsilon(1e-6));
    }
}

TEST_CASE("default hyperparameters scale with the data") {
    const auto f = std::make_shared<const FeatureMap>(numeric_grid({5, 5}));
    ObservationSet obs;
    obs.add(pt({0, 0}), 10.0);
    obs.add(pt({4, 4}), 20.0);
    const auto h = default_hyperparams(*f, obs, KernelFamily::product_mixed, MeanForm::linear);
    CHECK(h.mean.offset == doctest::Approx(15.0));
    CHECK(h.mean.slopes.size() == 2);
    CHECK(h.kernel.amplitude > 0.0);
    CHECK(h.noise_variance >= 1e-8);
    CHECK_NOTHROW(h.validate(2));
}

}
