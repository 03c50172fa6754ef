#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "autotune/random.hpp"
#include "autotune/space.hpp"

namespace autotune {

// Standard test functions, all minimized. Arguments outside the standard
// domain raise DomainError.
double branin(double x1, double x2);
double hartmann3(std::span<const double> x);
double rosenbrock(std::span<const double> x);
// Dixon-Price restricted to two dimensions.
double dixon2(double x1, double x2);

struct BenchmarkFunction {
    std::string name;
    std::vector<std::pair<double, double>> bounds;
    std::function<double(std::span<const double>)> fn;
    std::size_t default_grid = 51;
};

// "branin", "dixon", "hartmann3", "rosenbrock5". Throws ConfigError otherwise.
const BenchmarkFunction& benchmark(const std::string& name);
std::vector<std::string> benchmark_names();

// Where the response values come from during a run. Sources are not shared
// between concurrent runs: each run forks its own copy with its own noise
// stream.
class ResponseSource {
public:
    virtual ~ResponseSource() = default;

    // Throws MeasurementError when the measurement fails.
    virtual double measure(const ConfigPoint& x) = 0;
    [[nodiscard]] virtual std::unique_ptr<ResponseSource> fork(std::uint64_t seed) const = 0;
    [[nodiscard]] virtual bool deterministic() const = 0;
};

struct GroundTruth {
    double minimum = 0.0;
    std::size_t index = 0;
    ConfigPoint argmin;
};

// Exhaustive minimum of `value(linear index)` over a space.
GroundTruth scan_minimum(const ConfigSpace& space, const std::function<double(std::size_t)>& value);

class GridFunctionSource final : public ResponseSource {
public:
    GridFunctionSource(ConfigSpace space, std::shared_ptr<const std::vector<double>> values, double noise_sigma,
                       std::uint64_t seed);

    double measure(const ConfigPoint& x) override;
    [[nodiscard]] std::unique_ptr<ResponseSource> fork(std::uint64_t seed) const override;
    [[nodiscard]] bool deterministic() const override { return noise_sigma_ == 0.0; }

    // Noise-free value.
    [[nodiscard]] double exact(const ConfigPoint& x) const;
    [[nodiscard]] double noise_sigma() const noexcept { return noise_sigma_; }

private:
    ConfigSpace space_;
    std::shared_ptr<const std::vector<double>> values_;
    double noise_sigma_;
    Rng rng_;
};

struct GridProblem {
    ConfigSpace space;
    std::shared_ptr<GridFunctionSource> source;
    GroundTruth truth;
};

// Discretizes `fn` onto a uniform grid (grid sizes >= 2 per dimension) and
// attaches the grid optimum as ground truth.
GridProblem make_grid_source(const BenchmarkFunction& fn, const std::vector<std::size_t>& grid_sizes,
                             double noise_sigma, std::uint64_t seed = 0);
std::vector<std::size_t> default_grid_sizes(const BenchmarkFunction& fn);

enum class NoiseMode { none, fixed, replicates };

struct NoiseSpec {
    NoiseMode mode = NoiseMode::none;
    double sigma = 0.0;
};

// Sample standard deviation of the replicates stored for x, or nullopt
// with fewer than two replicates.
std::optional<double> replicate_sigma(const TabularDataset& data, const ConfigPoint& x);
// sqrt of the mean per-configuration sample variance; 0 when no
// configuration has two replicates.
double pooled_noise_sigma(const TabularDataset& data);

class PlaybackSource final : public ResponseSource {
public:
    // Throws CoverageError unless the dataset covers the whole space.
    PlaybackSource(std::shared_ptr<const TabularDataset> data, NoiseSpec noise, std::uint64_t seed = 0);

    double measure(const ConfigPoint& x) override;
    [[nodiscard]] std::unique_ptr<ResponseSource> fork(std::uint64_t seed) const override;
    [[nodiscard]] bool deterministic() const override { return noise_.mode == NoiseMode::none; }

    [[nodiscard]] double sigma_at(const ConfigPoint& x) const;

private:
    std::shared_ptr<const TabularDataset> data_;
    NoiseSpec noise_;
    double pooled_ = 0.0;
    Rng rng_;
};

// Runs `command name=value ...` per measurement and reads one number from
// its standard output. A nonzero exit status is a failed measurement.
class ExternalCommandSource final : public ResponseSource {
public:
    ExternalCommandSource(ConfigSpace space, std::string command);

    double measure(const ConfigPoint& x) override;
    [[nodiscard]] std::unique_ptr<ResponseSource> fork(std::uint64_t seed) const override;
    [[nodiscard]] bool deterministic() const override { return false; }

private:
    ConfigSpace space_;
    std::string command_;
};

// Turns a maximization target into a minimization one (f := -f).
class NegatedSource final : public ResponseSource {
public:
    explicit NegatedSource(std::unique_ptr<ResponseSource> inner) : inner_(std::move(inner)) {}

    double measure(const ConfigPoint& x) override { return -inner_->measure(x); }
    [[nodiscard]] std::unique_ptr<ResponseSource> fork(std::uint64_t seed) const override {
        return std::make_unique<NegatedSource>(inner_->fork(seed));
    }
    [[nodiscard]] bool deterministic() const override { return inner_->deterministic(); }

private:
    std::unique_ptr<ResponseSource> inner_;
};

}  // namespace autotune
