#pragma once

#include <array>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "autotune/gp.hpp"
#include "autotune/space.hpp"
#include "autotune/tuner.hpp"

namespace autotune {

// Pearson correlation. A constant input yields 0 and sets *degenerate.
double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate = nullptr);

struct MeritReport {
    std::vector<std::size_t> subset;  // 0-based parameter indices, ascending
    double merit = 0.0;
    std::vector<double> correlations;  // parameter-latency, one per subset member
    double mean_label_correlation = 0.0;  // mean |r_lp|
    double mean_inter_correlation = 0.0;  // mean |r_pp| over pairs; 0 for singletons
    std::vector<std::size_t> zero_variance;  // flagged parameters (correlation forced to 0)
};

// Correlation-based subset merit n*r_lp / sqrt(n + n(n-1) r_pp) over the
// aggregate rows of a dataset. Categorical columns use option indices.
MeritReport merit(const TabularDataset& data, std::vector<std::size_t> subset);

// All subsets up to max_subset_size, by merit (desc), then size, then
// lexicographic order. Exhaustive up to 12 parameters, beam search beyond.
std::vector<MeritReport> rank_subsets(const TabularDataset& data, std::size_t max_subset_size,
                                      std::size_t beam_width = 32);

struct SnrRow {
    std::string family;
    std::size_t samples = 0;
    double mean = 0.0;
    double sigma = 0.0;
    double ratio = 0.0;  // +inf when sigma == 0
    std::array<double, 2> mean_ci{};
    std::array<double, 2> sigma_ci{};
};

// 95% normal-theory intervals; sigma interval via a chi-square quantile
// approximation.
SnrRow snr_row(const std::string& family, std::span<const double> samples);
// Families with fewer than two samples are skipped and reported in *warnings.
std::vector<SnrRow> snr(const std::vector<std::pair<std::string, std::vector<double>>>& families,
                        std::vector<std::string>* warnings = nullptr);

struct CurveStats {
    double mean = 0.0;
    double median = 0.0;
    double q25 = 0.0;
    double q75 = 0.0;
    double min = 0.0;
    double max = 0.0;
};

// Linear-interpolation quantile of unsorted values, q in [0, 1].
double quantile(std::vector<double> values, double q);

struct AggregateReport {
    std::string algorithm;
    std::size_t replications = 0;
    std::vector<CurveStats> per_iteration;  // index t-1
    std::vector<std::string> warnings;
};

// |best-so-far - ground_truth| per iteration across traces. Traces of
// different lengths are cut to the shortest (with a warning).
AggregateReport distance_curve(const std::vector<RunTrace>& traces, double ground_truth);

// Distance-to-optimum curves of one trace.
std::vector<double> distance_series(const RunTrace& trace, double ground_truth);

// Iteration (1-based) at which a trace first reaches ground truth within tol;
// 0 if never.
std::size_t first_hit(const RunTrace& trace, double ground_truth, double tol = 1e-12);

struct HoldoutReport {
    double rmse = 0.0;
    std::vector<double> abs_pct_error;   // one per evaluated point with y != 0
    std::vector<std::size_t> excluded;   // linear indices skipped because y == 0
    std::size_t evaluated = 0;
};

// Posterior-mean accuracy over the dataset points not in the training set.
HoldoutReport holdout_accuracy(const GpModel& model, const TabularDataset& data);

}  // namespace autotune
