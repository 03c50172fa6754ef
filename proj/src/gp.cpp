#include "autotune/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "autotune/errors.hpp"

namespace autotune {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

std::vector<double> jitter_levels() {
    std::vector<double> levels{0.0};
    for (double j = 1e-10; j <= 1e-4 * 1.0000001; j *= 10.0) {
        levels.push_back(j);
    }
    return levels;
}

Eigen::MatrixXd training_features(const FeatureMap& features, const std::vector<ConfigPoint>& points) {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(points.size()), static_cast<Eigen::Index>(features.dims()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        x.row(static_cast<Eigen::Index>(i)) = features.encode(points[i]).transpose();
    }
    return x;
}

Eigen::MatrixXd mean_basis(MeanForm form, const Eigen::MatrixXd& x) {
    const auto t = x.rows();
    if (form == MeanForm::constant) {
        return Eigen::MatrixXd::Ones(t, 1);
    }
    Eigen::MatrixXd h(t, x.cols() + 1);
    h.col(0).setOnes();
    h.rightCols(x.cols()) = x;
    return h;
}

double stddev(const std::vector<double>& y) {
    if (y.size() < 2) {
        return 0.0;
    }
    double mean = 0.0;
    for (double v : y) {
        mean += v;
    }
    mean /= static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(y.size() - 1));
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureMap::FeatureMap(const ConfigSpace& space, bool standardize) : space_(space) {
    const auto d = space.dims();
    kinds_.resize(d);
    offset_.assign(d, 0.0);
    scale_.assign(d, 1.0);
    for (std::size_t l = 0; l < d; ++l) {
        const auto& p = space.params()[l];
        kinds_[l] = p.kind() == ParamKind::categorical ? DimKind::categorical : DimKind::numeric;
        if (kinds_[l] == DimKind::numeric && standardize) {
            const double lo = p.values().front();
            const double hi = p.values().back();
            offset_[l] = lo;
            scale_[l] = hi > lo ? 1.0 / (hi - lo) : 0.0;
        }
    }
    grid_.resize(static_cast<Eigen::Index>(space.size()), static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < space.size(); ++i) {
        grid_.row(static_cast<Eigen::Index>(i)) = encode(space.point_at(i)).transpose();
    }
}

Eigen::VectorXd FeatureMap::encode(const ConfigPoint& x) const {
    const auto raw = space_.values(x);
    Eigen::VectorXd f(static_cast<Eigen::Index>(raw.size()));
    for (std::size_t l = 0; l < raw.size(); ++l) {
        f(static_cast<Eigen::Index>(l)) = (raw[l] - offset_[l]) * scale_[l];
    }
    return f;
}

double MeanSpec::operator()(const Eigen::Ref<const Eigen::VectorXd>& features) const {
    double m = offset;
    if (form == MeanForm::linear) {
        for (Eigen::Index l = 0; l < features.size(); ++l) {
            m += slopes[static_cast<std::size_t>(l)] * features(l);
        }
    }
    return m;
}

void Hyperparams::validate(std::size_t dims) const {
    if (!(kernel.amplitude > 0.0)) {
        throw ContractViolation("kernel amplitude must be positive");
    }
    if (kernel.scales.size() != dims) {
        throw ContractViolation("expected " + std::to_string(dims) + " kernel scales, got " +
                                std::to_string(kernel.scales.size()));
    }
    for (double s : kernel.scales) {
        if (!(s > 0.0)) {
            throw ContractViolation("kernel scales must be positive");
        }
    }
    if (mean.form == MeanForm::constant && !mean.slopes.empty()) {
        throw ContractViolation("constant mean takes no slopes");
    }
    if (mean.form == MeanForm::linear && mean.slopes.size() != dims) {
        throw ContractViolation("linear mean needs one slope per dimension");
    }
    if (!(noise_variance >= 0.0)) {
        throw ContractViolation("noise variance must be nonnegative");
    }
}

bool uses_matern(KernelFamily family, DimKind kind) noexcept {
    switch (family) {
        case KernelFamily::matern12:
            return true;
        case KernelFamily::categorical_ard:
            return false;
        case KernelFamily::product_mixed:
            return kind == DimKind::numeric;
    }
    return true;
}

double kernel_eval(const KernelSpec& spec, std::span<const DimKind> kinds, const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b) {
    const auto d = kinds.size();
    if (static_cast<std::size_t>(a.size()) != d || static_cast<std::size_t>(b.size()) != d ||
        spec.scales.size() != d) {
        throw ContractViolation("kernel dimension mismatch");
    }
    double r2 = 0.0;
    double mismatch = 0.0;
    for (std::size_t l = 0; l < d; ++l) {
        const auto i = static_cast<Eigen::Index>(l);
        if (uses_matern(spec.family, kinds[l])) {
            const double z = (a(i) - b(i)) / spec.scales[l];
            r2 += z * z;
        } else if (a(i) != b(i)) {
            mismatch += spec.scales[l];
        }
    }
    return spec.amplitude * spec.amplitude * std::exp(-std::sqrt(r2) - mismatch);
}

double kernel_eval(const KernelSpec& spec, const FeatureMap& features, const ConfigPoint& a, const ConfigPoint& b) {
    return kernel_eval(spec, features.kinds(), features.encode(a), features.encode(b));
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, std::span<const DimKind> kinds, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b) {
    const auto d = static_cast<Eigen::Index>(kinds.size());
    if (a.cols() != d || b.cols() != d || spec.scales.size() != kinds.size()) {
        throw ContractViolation("kernel dimension mismatch");
    }
    // Pre-scale Matern coordinates so the inner loop is a plain distance.
    Eigen::MatrixXd as = a;
    Eigen::MatrixXd bs = b;
    std::vector<Eigen::Index> matern;
    std::vector<Eigen::Index> categorical;
    for (Eigen::Index l = 0; l < d; ++l) {
        if (uses_matern(spec.family, kinds[static_cast<std::size_t>(l)])) {
            as.col(l) /= spec.scales[static_cast<std::size_t>(l)];
            bs.col(l) /= spec.scales[static_cast<std::size_t>(l)];
            matern.push_back(l);
        } else {
            categorical.push_back(l);
        }
    }
    const double amp2 = spec.amplitude * spec.amplitude;
    Eigen::MatrixXd k(a.rows(), b.rows());
    for (Eigen::Index j = 0; j < b.rows(); ++j) {
        for (Eigen::Index i = 0; i < a.rows(); ++i) {
            double r2 = 0.0;
            for (auto l : matern) {
                const double z = as(i, l) - bs(j, l);
                r2 += z * z;
            }
            double mismatch = 0.0;
            for (auto l : categorical) {
                if (a(i, l) != b(j, l)) {
                    mismatch += spec.scales[static_cast<std::size_t>(l)];
                }
            }
            k(i, j) = amp2 * std::exp(-std::sqrt(r2) - mismatch);
        }
    }
    return k;
}

bool ObservationSet::contains(const ConfigPoint& x) const {
    return std::find(points.begin(), points.end(), x) != points.end();
}

void ObservationSet::add(ConfigPoint x, double value) {
    if (contains(x)) {
        throw ContractViolation("configuration already observed");
    }
    points.push_back(std::move(x));
    y.push_back(value);
}

// ---------------------------------------------------------------------------

namespace detail {

Factorization factorize_with_jitter(const Eigen::MatrixXd& k, double scale) {
    const double max_diag = k.rows() > 0 ? k.diagonal().maxCoeff() : 0.0;
    for (double level : jitter_levels()) {
        Eigen::MatrixXd kj = k;
        kj.diagonal().array() += level * scale;
        Eigen::LLT<Eigen::MatrixXd> llt(kj);
        if (llt.info() != Eigen::Success) {
            continue;
        }
        Eigen::MatrixXd lower = llt.matrixL();
        const double min_pivot = lower.rows() > 0 ? lower.diagonal().array().square().minCoeff() : 1.0;
        if (std::isfinite(min_pivot) && min_pivot > kPivotTolerance * std::max(max_diag, scale)) {
            return {std::move(lower), level};
        }
    }
    double min_eig = std::numeric_limits<double>::quiet_NaN();
    if (k.allFinite()) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
        min_eig = eig.eigenvalues().minCoeff();
    }
    throw ConditioningError("covariance matrix not positive definite after maximum jitter", min_eig);
}

}  // namespace detail

GpModel GpModel::prior(std::shared_ptr<const FeatureMap> features, Hyperparams hyper) {
    hyper.validate(features->dims());
    GpModel m;
    m.x_.resize(0, static_cast<Eigen::Index>(features->dims()));
    m.features_ = std::move(features);
    m.hyper_ = std::move(hyper);
    m.chol_.resize(0, 0);
    m.resid_.resize(0);
    m.alpha_.resize(0);
    return m;
}

GpModel GpModel::fit(std::shared_ptr<const FeatureMap> features, const ObservationSet& obs, Hyperparams hyper) {
    hyper.validate(features->dims());
    if (obs.points.size() != obs.y.size()) {
        throw ContractViolation("observation points and responses differ in length");
    }
    GpModel m;
    m.x_ = training_features(*features, obs.points);
    m.features_ = std::move(features);
    m.hyper_ = std::move(hyper);
    m.train_ = obs;
    const auto t = m.x_.rows();
    m.resid_.resize(t);
    for (Eigen::Index i = 0; i < t; ++i) {
        m.resid_(i) = obs.y[static_cast<std::size_t>(i)] - m.hyper_.mean(m.x_.row(i).transpose());
    }
    Eigen::MatrixXd k = kernel_matrix(m.hyper_.kernel, m.features_->kinds(), m.x_, m.x_);
    k.diagonal().array() += m.hyper_.noise_variance;
    const double amp2 = m.hyper_.kernel.amplitude * m.hyper_.kernel.amplitude;
    auto fac = detail::factorize_with_jitter(k, amp2);
    m.chol_ = std::move(fac.lower);
    m.jitter_ = fac.jitter;
    m.solve_alpha();
    return m;
}

void GpModel::solve_alpha() {
    alpha_ = chol_.triangularView<Eigen::Lower>().solve(resid_);
    chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
}

GpModel GpModel::refit_with(const ConfigPoint& x, double y) const {
    if (train_.contains(x)) {
        throw ContractViolation("refit_with: configuration already in the training set");
    }
    ObservationSet grown = train_;
    grown.add(x, y);
    if (train_.size() == 0) {
        return fit(features_, grown, hyper_);
    }
    const Eigen::VectorXd f = features_->encode(x);
    const double amp2 = hyper_.kernel.amplitude * hyper_.kernel.amplitude;
    const Eigen::VectorXd kx = kernel_matrix(hyper_.kernel, features_->kinds(), x_, f.transpose()).col(0);
    const Eigen::VectorXd l12 = chol_.triangularView<Eigen::Lower>().solve(kx);
    const double diag = amp2 + hyper_.noise_variance + jitter_ * amp2;
    const double pivot2 = diag - l12.squaredNorm();
    const double max_diag = chol_.rowwise().squaredNorm().maxCoeff();
    if (!(pivot2 > detail::kPivotTolerance * std::max({max_diag, diag, amp2}))) {
        // Numerically dependent on the training set: refactorize with
        // escalating jitter (may throw ConditioningError).
        return fit(features_, grown, hyper_);
    }
    GpModel m;
    m.features_ = features_;
    m.hyper_ = hyper_;
    m.train_ = std::move(grown);
    m.jitter_ = jitter_;
    const auto t = x_.rows();
    m.x_.resize(t + 1, x_.cols());
    m.x_.topRows(t) = x_;
    m.x_.row(t) = f.transpose();
    m.resid_.resize(t + 1);
    m.resid_.head(t) = resid_;
    m.resid_(t) = y - hyper_.mean(f);
    m.chol_ = Eigen::MatrixXd::Zero(t + 1, t + 1);
    m.chol_.topLeftCorner(t, t) = chol_;
    m.chol_.block(t, 0, 1, t) = l12.transpose();
    m.chol_(t, t) = std::sqrt(pivot2);
    m.solve_alpha();
    return m;
}

Prediction GpModel::predict(const ConfigPoint& x) const {
    return predict_features(features_->encode(x));
}

Prediction GpModel::predict_features(const Eigen::Ref<const Eigen::VectorXd>& f) const {
    const double amp2 = hyper_.kernel.amplitude * hyper_.kernel.amplitude;
    Prediction p{hyper_.mean(f), amp2 + hyper_.noise_variance};
    if (x_.rows() == 0) {
        return p;
    }
    const Eigen::VectorXd kx = kernel_matrix(hyper_.kernel, features_->kinds(), x_, f.transpose()).col(0);
    p.mean += kx.dot(alpha_);
    const Eigen::VectorXd v = chol_.triangularView<Eigen::Lower>().solve(kx);
    p.variance = std::max(0.0, p.variance - v.squaredNorm());
    return p;
}

void GpModel::predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const {
    const double amp2 = hyper_.kernel.amplitude * hyper_.kernel.amplitude;
    const auto n = queries.rows();
    mean.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        mean(i) = hyper_.mean(queries.row(i).transpose());
    }
    variance = Eigen::VectorXd::Constant(n, amp2 + hyper_.noise_variance);
    if (x_.rows() == 0) {
        return;
    }
    Eigen::MatrixXd kq = kernel_matrix(hyper_.kernel, features_->kinds(), x_, queries);
    mean.noalias() += kq.transpose() * alpha_;
    chol_.triangularView<Eigen::Lower>().solveInPlace(kq);
    variance -= kq.colwise().squaredNorm().transpose();
    variance = variance.cwiseMax(0.0);
}

double GpModel::log_marginal_likelihood() const {
    const auto t = static_cast<double>(x_.rows());
    return -0.5 * resid_.dot(alpha_) - chol_.diagonal().array().log().sum() - 0.5 * t * kLog2Pi;
}

double log_marginal_likelihood(const FeatureMap& features, const ObservationSet& obs, const Hyperparams& hyper) {
    auto shared = std::make_shared<const FeatureMap>(features);
    return GpModel::fit(std::move(shared), obs, hyper).log_marginal_likelihood();
}

// ---------------------------------------------------------------------------

LikelihoodObjective::LikelihoodObjective(std::shared_ptr<const FeatureMap> features, const ObservationSet& obs,
                                         Hyperparams shape, LearnOptions options)
    : features_(std::move(features)), shape_(std::move(shape)), options_(options) {
    shape_.validate(features_->dims());
    x_ = training_features(*features_, obs.points);
    y_ = Eigen::Map<const Eigen::VectorXd>(obs.y.data(), static_cast<Eigen::Index>(obs.y.size()));
    basis_ = mean_basis(shape_.mean.form, x_);

    double sy = stddev(obs.y);
    if (!(sy > 1e-12)) {
        sy = 1.0;
    }
    const auto n = static_cast<Eigen::Index>(parameter_count());
    lower_.resize(n);
    upper_.resize(n);
    lower_(0) = std::log(1e-2 * sy);
    upper_(0) = std::log(1e2 * sy);
    for (std::size_t l = 0; l < features_->dims(); ++l) {
        const auto i = static_cast<Eigen::Index>(l + 1);
        if (uses_matern(shape_.kernel.family, features_->kinds()[l])) {
            lower_(i) = std::log(5e-3);
            upper_(i) = std::log(1e3);
        } else {
            lower_(i) = std::log(1e-4);
            upper_(i) = std::log(1e2);
        }
    }
    if (options_.learn_noise) {
        lower_(n - 1) = std::log(options_.noise_floor);
        upper_(n - 1) = std::log(std::max(sy * sy, 10.0 * options_.noise_floor));
    }
}

std::size_t LikelihoodObjective::parameter_count() const noexcept {
    return 1 + features_->dims() + (options_.learn_noise ? 1 : 0);
}

Eigen::VectorXd LikelihoodObjective::pack(const Hyperparams& h) const {
    Eigen::VectorXd v(static_cast<Eigen::Index>(parameter_count()));
    v(0) = std::log(h.kernel.amplitude);
    for (std::size_t l = 0; l < h.kernel.scales.size(); ++l) {
        v(static_cast<Eigen::Index>(l + 1)) = std::log(h.kernel.scales[l]);
    }
    if (options_.learn_noise) {
        v(v.size() - 1) = std::log(std::max(h.noise_variance, options_.noise_floor));
    }
    return v;
}

double LikelihoodObjective::evaluate(const Eigen::VectorXd& v, Eigen::VectorXd* gradient) const {
    const auto t = x_.rows();
    const auto d = static_cast<Eigen::Index>(features_->dims());
    KernelSpec kernel = shape_.kernel;
    kernel.amplitude = std::exp(v(0));
    for (Eigen::Index l = 0; l < d; ++l) {
        kernel.scales[static_cast<std::size_t>(l)] = std::exp(v(l + 1));
    }
    const double noise = options_.learn_noise ? std::exp(v(v.size() - 1)) : shape_.noise_variance;
    const double amp2 = kernel.amplitude * kernel.amplitude;

    Eigen::MatrixXd k = kernel_matrix(kernel, features_->kinds(), x_, x_);
    Eigen::MatrixXd ky = k;
    ky.diagonal().array() += noise;
    detail::Factorization fac;
    try {
        fac = detail::factorize_with_jitter(ky, amp2);
    } catch (const ConditioningError&) {
        return -std::numeric_limits<double>::infinity();
    }
    const auto lower = fac.lower.triangularView<Eigen::Lower>();

    // Generalized least squares for the mean coefficients.
    const Eigen::MatrixXd a = lower.solve(basis_);
    const Eigen::VectorXd c = lower.solve(y_);
    const Eigen::VectorXd beta = a.completeOrthogonalDecomposition().solve(c);
    const Eigen::VectorXd resid = y_ - basis_ * beta;
    Eigen::VectorXd alpha = lower.solve(resid);
    const double quad = alpha.squaredNorm();
    fac.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(alpha);
    const double value = -0.5 * quad - fac.lower.diagonal().array().log().sum() - 0.5 * static_cast<double>(t) * kLog2Pi;
    if (!std::isfinite(value)) {
        return -std::numeric_limits<double>::infinity();
    }
    if (gradient == nullptr) {
        return value;
    }

    Eigen::MatrixXd kinv = Eigen::MatrixXd::Identity(t, t);
    lower.solveInPlace(kinv);
    fac.lower.transpose().triangularView<Eigen::Upper>().solveInPlace(kinv);
    const Eigen::MatrixXd w = alpha * alpha.transpose() - kinv;

    gradient->setZero(v.size());
    // d/dlog(amplitude): the kernel and the jitter both scale with amp^2.
    (*gradient)(0) = (w.cwiseProduct(k).sum() + fac.jitter * amp2 * w.trace());
    if (options_.learn_noise) {
        (*gradient)(v.size() - 1) = 0.5 * noise * w.trace();
    }
    // Matern dims: dk/dlog(scale) = k * z^2 / r; categorical: -scale * mismatch * k.
    std::vector<Eigen::Index> matern;
    std::vector<Eigen::Index> categorical;
    for (Eigen::Index l = 0; l < d; ++l) {
        (uses_matern(kernel.family, features_->kinds()[static_cast<std::size_t>(l)]) ? matern : categorical).push_back(l);
    }
    Eigen::MatrixXd scaled = x_;
    for (auto l : matern) {
        scaled.col(l) /= kernel.scales[static_cast<std::size_t>(l)];
    }
    const Eigen::MatrixXd xt = scaled.transpose();
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(d);
    for (Eigen::Index j = 1; j < t; ++j) {
        for (Eigen::Index i = 0; i < j; ++i) {
            const double wk = w(i, j) * k(i, j);
            if (wk == 0.0) {
                continue;
            }
            if (!matern.empty()) {
                double r2 = 0.0;
                for (auto l : matern) {
                    const double z = xt(l, i) - xt(l, j);
                    r2 += z * z;
                }
                if (r2 > 0.0) {
                    const double c = wk / std::sqrt(r2);
                    for (auto l : matern) {
                        const double z = xt(l, i) - xt(l, j);
                        acc(l) += c * z * z;
                    }
                }
            }
            for (auto l : categorical) {
                if (xt(l, i) != xt(l, j)) {
                    acc(l) -= wk * kernel.scales[static_cast<std::size_t>(l)];
                }
            }
        }
    }
    gradient->segment(1, d) = acc;
    return value;
}

Hyperparams LikelihoodObjective::unpack(const Eigen::VectorXd& v) const {
    Hyperparams h = shape_;
    h.kernel.amplitude = std::exp(v(0));
    for (std::size_t l = 0; l < features_->dims(); ++l) {
        h.kernel.scales[l] = std::exp(v(static_cast<Eigen::Index>(l + 1)));
    }
    if (options_.learn_noise) {
        h.noise_variance = std::exp(v(v.size() - 1));
    }
    Eigen::MatrixXd ky = kernel_matrix(h.kernel, features_->kinds(), x_, x_);
    ky.diagonal().array() += h.noise_variance;
    const auto fac = detail::factorize_with_jitter(ky, h.kernel.amplitude * h.kernel.amplitude);
    const auto lower = fac.lower.triangularView<Eigen::Lower>();
    const Eigen::MatrixXd a = lower.solve(basis_);
    const Eigen::VectorXd c = lower.solve(y_);
    const Eigen::VectorXd beta = a.completeOrthogonalDecomposition().solve(c);
    h.mean.offset = beta(0);
    if (h.mean.form == MeanForm::linear) {
        for (std::size_t l = 0; l < features_->dims(); ++l) {
            h.mean.slopes[l] = beta(static_cast<Eigen::Index>(l + 1));
        }
    }
    return h;
}

namespace {

Eigen::VectorXd clamp_box(const Eigen::VectorXd& v, const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
    return v.cwiseMax(lo).cwiseMin(hi);
}

// Projected BFGS ascent inside a box. Returns the best point found.
Eigen::VectorXd maximize(const LikelihoodObjective& objective, Eigen::VectorXd x, int max_iterations, double& best) {
    const auto& lo = objective.lower_bounds();
    const auto& hi = objective.upper_bounds();
    const auto n = x.size();
    x = clamp_box(x, lo, hi);
    Eigen::VectorXd g(n);
    double f = objective.evaluate(x, &g);
    best = f;
    if (!std::isfinite(f)) {
        return x;
    }
    Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
    constexpr double kBoundTol = 1e-12;
    for (int iter = 0; iter < max_iterations; ++iter) {
        Eigen::VectorXd pg = g;
        std::vector<bool> blocked(static_cast<std::size_t>(n), false);
        for (Eigen::Index i = 0; i < n; ++i) {
            if ((x(i) <= lo(i) + kBoundTol && g(i) < 0.0) || (x(i) >= hi(i) - kBoundTol && g(i) > 0.0)) {
                pg(i) = 0.0;
                blocked[static_cast<std::size_t>(i)] = true;
            }
        }
        if (pg.lpNorm<Eigen::Infinity>() < 1e-5) {
            break;
        }
        Eigen::VectorXd dir = h * pg;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (blocked[static_cast<std::size_t>(i)]) {
                dir(i) = 0.0;
            }
        }
        if (!(dir.dot(pg) > 0.0)) {
            h.setIdentity();
            dir = pg;
        }
        const double longest = dir.lpNorm<Eigen::Infinity>();
        if (longest > 2.0) {
            dir *= 2.0 / longest;
        }
        double step = 1.0;
        bool accepted = false;
        Eigen::VectorXd xn;
        Eigen::VectorXd gn(n);
        double fn = f;
        for (int ls = 0; ls < 30; ++ls) {
            xn = clamp_box(x + step * dir, lo, hi);
            fn = objective.evaluate(xn, &gn);
            if (std::isfinite(fn) && fn >= f + 1e-4 * g.dot(xn - x)) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            break;
        }
        const Eigen::VectorXd s = xn - x;
        const Eigen::VectorXd yv = g - gn;  // gradient change of the minimized -f
        const double sy = s.dot(yv);
        if (sy > 1e-12) {
            const double rho = 1.0 / sy;
            const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
            h = (eye - rho * s * yv.transpose()) * h * (eye - rho * yv * s.transpose()) + rho * s * s.transpose();
        }
        const double change = fn - f;
        x = xn;
        f = fn;
        g = gn;
        if (change < 1e-8 * (1.0 + std::abs(f))) {
            break;
        }
    }
    best = f;
    return x;
}

}  // namespace

Hyperparams learn_hyperparams(std::shared_ptr<const FeatureMap> features, const ObservationSet& obs,
                              const Hyperparams& init, int restarts, Rng& rng, const LearnOptions& options) {
    if (obs.size() < 2) {
        throw ContractViolation("hyperparameter learning needs at least two observations");
    }
    if (restarts < 1) {
        throw ContractViolation("restarts must be >= 1");
    }
    const LikelihoodObjective objective(features, obs, init, options);
    const auto& lo = objective.lower_bounds();
    const auto& hi = objective.upper_bounds();

    double best_value = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd best_x;
    for (int r = 0; r < restarts; ++r) {
        Eigen::VectorXd start;
        if (r == 0) {
            start = objective.pack(init);
        } else {
            start.resize(lo.size());
            for (Eigen::Index i = 0; i < lo.size(); ++i) {
                // Draw from the middle part of the box; the edges are rarely useful starts.
                const double width = hi(i) - lo(i);
                std::uniform_real_distribution<double> u(lo(i) + 0.2 * width, hi(i) - 0.3 * width);
                start(i) = u(rng);
            }
        }
        double value = 0.0;
        Eigen::VectorXd x = maximize(objective, start, options.max_iterations, value);
        if (std::isfinite(value) && value > best_value) {
            best_value = value;
            best_x = x;
        }
    }

    double init_lml = -std::numeric_limits<double>::infinity();
    try {
        init_lml = log_marginal_likelihood(*features, obs, init);
    } catch (const ConditioningError&) {
    }
    if (!std::isfinite(best_value)) {
        if (std::isfinite(init_lml)) {
            return init;
        }
        throw LearningError("no restart produced a finite marginal likelihood");
    }
    Hyperparams learned = objective.unpack(best_x);
    double learned_lml = -std::numeric_limits<double>::infinity();
    try {
        learned_lml = log_marginal_likelihood(*features, obs, learned);
    } catch (const ConditioningError&) {
    }
    if (!(learned_lml >= init_lml)) {
        return init;
    }
    return learned;
}

Hyperparams default_hyperparams(const FeatureMap& features, const ObservationSet& obs, KernelFamily family,
                                MeanForm form) {
    Hyperparams h;
    h.kernel.family = family;
    double sy = stddev(obs.y);
    if (!(sy > 1e-12)) {
        sy = 1.0;
    }
    h.kernel.amplitude = sy;
    h.kernel.scales.resize(features.dims());
    for (std::size_t l = 0; l < features.dims(); ++l) {
        h.kernel.scales[l] = uses_matern(family, features.kinds()[l]) ? 0.3 : 1.0;
    }
    h.mean.form = form;
    double mean = 0.0;
    for (double v : obs.y) {
        mean += v;
    }
    h.mean.offset = obs.y.empty() ? 0.0 : mean / static_cast<double>(obs.y.size());
    if (form == MeanForm::linear) {
        h.mean.slopes.assign(features.dims(), 0.0);
    }
    h.noise_variance = std::max(1e-2 * sy * sy, 1e-8);
    return h;
}

}  // namespace autotune
