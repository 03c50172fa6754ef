#pragma once

#include <cmath>
#include <memory>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "autotune/gp.hpp"
#include "autotune/random.hpp"
#include "autotune/space.hpp"

namespace testsupport {

using namespace autotune;

inline ConfigSpace numeric_grid(const std::vector<std::size_t>& sizes) {
    std::vector<ParameterDef> params;
    for (std::size_t l = 0; l < sizes.size(); ++l) {
        std::vector<double> v(sizes[l]);
        for (std::size_t k = 0; k < sizes[l]; ++k) {
            v[k] = static_cast<double>(k);
        }
        params.push_back(ParameterDef::numeric("p" + std::to_string(l), v));
    }
    return ConfigSpace(params);
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

// Random GP problem over a small space mixing numeric and categorical
// dimensions.
struct Instance {
    std::shared_ptr<const FeatureMap> features;
    ObservationSet obs;
    Hyperparams hyper;
};

inline Instance random_instance(Rng& rng, std::size_t max_t, std::size_t max_d, double noise_lo, double noise_hi,
                                bool allow_categorical = true) {
    const std::size_t d = pick(rng, 1, max_d);
    std::vector<ParameterDef> params;
    bool any_categorical = false;
    for (std::size_t l = 0; l < d; ++l) {
        const std::size_t m = pick(rng, 3, 8);
        if (allow_categorical && uniform(rng, 0, 1) < 0.35) {
            std::vector<std::string> labels;
            for (std::size_t k = 0; k < m; ++k) {
                labels.push_back("c" + std::to_string(k));
            }
            params.push_back(ParameterDef::categorical("q" + std::to_string(l), labels));
            any_categorical = true;
        } else {
            std::vector<double> v(m);
            double acc = 0;
            for (auto& x : v) {
                acc += uniform(rng, 0.5, 3.0);
                x = acc;
            }
            params.push_back(ParameterDef::numeric("q" + std::to_string(l), v));
        }
    }
    ConfigSpace space(params);
    Instance inst;
    inst.features = std::make_shared<const FeatureMap>(space);
    const std::size_t t = std::min<std::size_t>(pick(rng, 1, max_t), space.size());
    std::vector<std::size_t> order(space.size());
    for (std::size_t i = 0; i < order.size(); ++i) {
        order[i] = i;
    }
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t i = 0; i < t; ++i) {
        inst.obs.add(space.point_at(order[i]), uniform(rng, -3, 3));
    }
    const double u = uniform(rng, 0, 1);
    inst.hyper.kernel.family = !any_categorical ? KernelFamily::matern12
                               : u < 0.6        ? KernelFamily::product_mixed
                               : u < 0.8        ? KernelFamily::categorical_ard
                                                : KernelFamily::matern12;
    inst.hyper.kernel.amplitude = uniform(rng, 0.5, 2.0);
    for (std::size_t l = 0; l < d; ++l) {
        inst.hyper.kernel.scales.push_back(uniform(rng, 0.2, 2.0));
    }
    inst.hyper.noise_variance = noise_hi > 0 ? std::exp(uniform(rng, std::log(noise_lo), std::log(noise_hi))) : 0.0;
    if (uniform(rng, 0, 1) < 0.5) {
        inst.hyper.mean.form = MeanForm::linear;
        inst.hyper.mean.offset = uniform(rng, -1, 1);
        for (std::size_t l = 0; l < d; ++l) {
            inst.hyper.mean.slopes.push_back(uniform(rng, -1, 1));
        }
    } else {
        inst.hyper.mean.offset = uniform(rng, -1, 1);
    }
    return inst;
}

// Posterior by explicit inversion, for comparison with the factorized path.
struct DenseOracle {
    Eigen::MatrixXd x;
    Eigen::MatrixXd kinv;
    Eigen::VectorXd resid;
    Hyperparams hyper;
    std::vector<DimKind> kinds;
    double logdet = 0;

    DenseOracle(const FeatureMap& f, const ObservationSet& obs, const Hyperparams& h) : hyper(h), kinds(f.kinds()) {
        const auto t = static_cast<Eigen::Index>(obs.size());
        x.resize(t, static_cast<Eigen::Index>(f.dims()));
        resid.resize(t);
        for (Eigen::Index i = 0; i < t; ++i) {
            x.row(i) = f.encode(obs.points[static_cast<std::size_t>(i)]).transpose();
            resid(i) = obs.y[static_cast<std::size_t>(i)] - h.mean(x.row(i).transpose());
        }
        Eigen::MatrixXd k(t, t);
        for (Eigen::Index i = 0; i < t; ++i) {
            for (Eigen::Index j = 0; j < t; ++j) {
                k(i, j) = kernel_eval(h.kernel, kinds, x.row(i).transpose(), x.row(j).transpose());
            }
        }
        k.diagonal().array() += h.noise_variance;
        kinv = k.inverse();
        logdet = std::log(k.determinant());
    }

    [[nodiscard]] Prediction predict(const Eigen::VectorXd& q) const {
        Eigen::VectorXd kx(x.rows());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
            kx(i) = kernel_eval(hyper.kernel, kinds, x.row(i).transpose(), q);
        }
        Prediction p;
        p.mean = hyper.mean(q) + kx.dot(kinv * resid);
        p.variance = kernel_eval(hyper.kernel, kinds, q, q) + hyper.noise_variance - kx.dot(kinv * kx);
        return p;
    }

    [[nodiscard]] double lml() const {
        return -0.5 * resid.dot(kinv * resid) - 0.5 * logdet -
               0.5 * static_cast<double>(x.rows()) * std::log(2 * std::numbers::pi);
    }
};

// Subset merit from first principles.
inline double oracle_corr(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = double(a.size());
    double ma = 0;
    double mb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i] / n;
        mb += b[i] / n;
    }
    double sab = 0;
    double saa = 0;
    double sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return saa == 0 || sbb == 0 ? 0.0 : sab / std::sqrt(saa * sbb);
}

inline double oracle_merit(const TabularDataset& d, const std::vector<std::size_t>& subset) {
    const auto& s = d.space();
    std::vector<std::vector<double>> cols(s.dims());
    std::vector<double> y;
    for (auto i : d.covered()) {
        const auto x = s.point_at(i);
        for (std::size_t l = 0; l < s.dims(); ++l) {
            cols[l].push_back(s.params()[l].values()[x.coords[l]]);
        }
        y.push_back(*d.value(x));
    }
    const double n = double(subset.size());
    double rlp = 0;
    for (auto l : subset) {
        rlp += std::abs(oracle_corr(cols[l], y)) / n;
    }
    double rpp = 0;
    std::size_t pairs = 0;
    for (std::size_t a = 0; a < subset.size(); ++a) {
        for (std::size_t b = a + 1; b < subset.size(); ++b) {
            rpp += std::abs(oracle_corr(cols[subset[a]], cols[subset[b]]));
            ++pairs;
        }
    }
    rpp = pairs == 0 ? 0.0 : rpp / double(pairs);
    return n * rlp / std::sqrt(n + n * (n - 1) * rpp);
}

}  // namespace testsupport
