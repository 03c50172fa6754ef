#pragma once

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <vector>

#include "autotune/random.hpp"
#include "autotune/space.hpp"

namespace autotune {

enum class DimKind { numeric, categorical };

// Converts configuration points into the feature vectors the kernels see.
// Integer-grid dimensions are min-max scaled to [0, 1]; categorical
// dimensions carry the option index (only equality matters to them).
class FeatureMap {
public:
    explicit FeatureMap(const ConfigSpace& space, bool standardize = true);

    [[nodiscard]] std::size_t dims() const noexcept { return kinds_.size(); }
    [[nodiscard]] const std::vector<DimKind>& kinds() const noexcept { return kinds_; }
    [[nodiscard]] const ConfigSpace& space() const noexcept { return space_; }

    [[nodiscard]] Eigen::VectorXd encode(const ConfigPoint& x) const;
    // Row i holds the features of the point with linear index i.
    [[nodiscard]] const Eigen::MatrixXd& grid() const noexcept { return grid_; }

private:
    ConfigSpace space_;
    std::vector<DimKind> kinds_;
    std::vector<double> offset_;
    std::vector<double> scale_;
    Eigen::MatrixXd grid_;
};

enum class KernelFamily { matern12, categorical_ard, product_mixed };

// amplitude is theta_0; scales holds one ARD scale per dimension. For
// Matern dimensions the scale is a length (large = irrelevant); for
// categorical dimensions it multiplies the mismatch count (small = irrelevant).
struct KernelSpec {
    KernelFamily family = KernelFamily::product_mixed;
    double amplitude = 1.0;
    std::vector<double> scales;
};

enum class MeanForm { constant, linear };

struct MeanSpec {
    MeanForm form = MeanForm::constant;
    double offset = 0.0;
    std::vector<double> slopes;

    [[nodiscard]] double operator()(const Eigen::Ref<const Eigen::VectorXd>& features) const;
};

struct Hyperparams {
    KernelSpec kernel;
    MeanSpec mean;
    double noise_variance = 0.0;

    void validate(std::size_t dims) const;
};

// Whether a dimension is handled by the Matern factor under `family`.
bool uses_matern(KernelFamily family, DimKind kind) noexcept;

double kernel_eval(const KernelSpec& spec, std::span<const DimKind> kinds, const Eigen::Ref<const Eigen::VectorXd>& a,
                   const Eigen::Ref<const Eigen::VectorXd>& b);
double kernel_eval(const KernelSpec& spec, const FeatureMap& features, const ConfigPoint& a, const ConfigPoint& b);

// Dense kernel matrix between the rows of a and b (no noise, no jitter).
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, std::span<const DimKind> kinds, const Eigen::MatrixXd& a,
                              const Eigen::MatrixXd& b);

struct ObservationSet {
    std::vector<ConfigPoint> points;
    std::vector<double> y;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
    [[nodiscard]] bool contains(const ConfigPoint& x) const;
    void add(ConfigPoint x, double value);
};

struct Prediction {
    double mean = 0.0;
    double variance = 0.0;
};

// Exact GP posterior over a fixed training set. Immutable: refit_with
// returns a new model.
class GpModel {
public:
    // Model with no observations; predictions return the prior.
    static GpModel prior(std::shared_ptr<const FeatureMap> features, Hyperparams hyper);
    static GpModel fit(std::shared_ptr<const FeatureMap> features, const ObservationSet& obs, Hyperparams hyper);

    [[nodiscard]] GpModel refit_with(const ConfigPoint& x, double y) const;

    [[nodiscard]] Prediction predict(const ConfigPoint& x) const;
    [[nodiscard]] Prediction predict_features(const Eigen::Ref<const Eigen::VectorXd>& f) const;
    // Posterior mean and variance at each row of `queries`.
    void predict_batch(const Eigen::MatrixXd& queries, Eigen::VectorXd& mean, Eigen::VectorXd& variance) const;

    [[nodiscard]] double log_marginal_likelihood() const;

    [[nodiscard]] const Hyperparams& hyper() const noexcept { return hyper_; }
    [[nodiscard]] const ObservationSet& train() const noexcept { return train_; }
    [[nodiscard]] const FeatureMap& features() const noexcept { return *features_; }
    [[nodiscard]] std::shared_ptr<const FeatureMap> feature_map() const noexcept { return features_; }
    [[nodiscard]] const Eigen::MatrixXd& chol() const noexcept { return chol_; }
    [[nodiscard]] const Eigen::VectorXd& alpha() const noexcept { return alpha_; }
    // Diagonal jitter actually added, as a multiple of amplitude^2.
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] std::size_t size() const noexcept { return train_.size(); }

private:
    GpModel() = default;
    void solve_alpha();

    std::shared_ptr<const FeatureMap> features_;
    Hyperparams hyper_;
    ObservationSet train_;
    Eigen::MatrixXd x_;      // t x d training features
    Eigen::VectorXd resid_;  // y - mean(x)
    Eigen::MatrixXd chol_;   // lower factor of K + (noise + jitter) I
    Eigen::VectorXd alpha_;
    double jitter_ = 0.0;
};

double log_marginal_likelihood(const FeatureMap& features, const ObservationSet& obs, const Hyperparams& hyper);

namespace detail {

struct Factorization {
    Eigen::MatrixXd lower;
    double jitter = 0.0;
};

// Cholesky of `k + jitter * scale * I`, trying jitter 0 then 1e-10 up to
// 1e-4 in decades. Throws ConditioningError if every level fails.
Factorization factorize_with_jitter(const Eigen::MatrixXd& k, double scale);

// A pivot counts as positive only above this multiple of the diagonal scale.
inline constexpr double kPivotTolerance = 1e-13;

}  // namespace detail

// ---------------------------------------------------------------------------
// Hyperparameter learning.

struct LearnOptions {
    bool learn_noise = true;
    double noise_floor = 1e-8;
    int max_iterations = 100;
};

// Objective maximized by the learner: the log marginal likelihood with the
// mean-function coefficients set to their likelihood-maximizing values.
// The free vector holds log(amplitude), log(scale_l) for each dimension and,
// when learned, log(noise_variance).
class LikelihoodObjective {
public:
    LikelihoodObjective(std::shared_ptr<const FeatureMap> features, const ObservationSet& obs, Hyperparams shape,
                        LearnOptions options);

    [[nodiscard]] std::size_t parameter_count() const noexcept;
    [[nodiscard]] Eigen::VectorXd pack(const Hyperparams& h) const;
    // Hyperparameters for a free vector, with the profiled mean filled in.
    [[nodiscard]] Hyperparams unpack(const Eigen::VectorXd& v) const;

    // Value and analytic gradient. Returns -infinity when the covariance
    // cannot be factorized.
    double evaluate(const Eigen::VectorXd& v, Eigen::VectorXd* gradient) const;

    [[nodiscard]] const Eigen::VectorXd& lower_bounds() const noexcept { return lower_; }
    [[nodiscard]] const Eigen::VectorXd& upper_bounds() const noexcept { return upper_; }

private:
    std::shared_ptr<const FeatureMap> features_;
    Hyperparams shape_;
    LearnOptions options_;
    Eigen::MatrixXd x_;
    Eigen::VectorXd y_;
    Eigen::MatrixXd basis_;  // mean-function regressors, t x p
    Eigen::VectorXd lower_;
    Eigen::VectorXd upper_;
};

// Multi-start quasi-Newton maximization of the marginal likelihood. The
// first start is `init`; the others are drawn uniformly inside the box.
Hyperparams learn_hyperparams(std::shared_ptr<const FeatureMap> features, const ObservationSet& obs,
                              const Hyperparams& init, int restarts, Rng& rng, const LearnOptions& options = {});

// Starting hyperparameters scaled to the observed responses.
Hyperparams default_hyperparams(const FeatureMap& features, const ObservationSet& obs, KernelFamily family,
                                MeanForm form);

}  // namespace autotune
