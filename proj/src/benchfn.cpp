#include "autotune/benchfn.hpp"

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sys/wait.h>

#include "autotune/errors.hpp"

namespace autotune {

namespace {

constexpr double kDomainSlack = 1e-9;

void check_range(const char* fn, double v, double lo, double hi) {
    if (!(v >= lo - kDomainSlack && v <= hi + kDomainSlack)) {
        throw DomainError(std::string(fn) + ": argument " + std::to_string(v) + " outside [" + std::to_string(lo) +
                          ", " + std::to_string(hi) + "]");
    }
}

std::map<std::string, BenchmarkFunction> make_registry() {
    std::map<std::string, BenchmarkFunction> reg;
    reg["branin"] = {"branin", {{-5.0, 10.0}, {0.0, 15.0}},
                     [](std::span<const double> x) { return branin(x[0], x[1]); }, 51};
    reg["dixon"] = {"dixon", {{-10.0, 10.0}, {-10.0, 10.0}},
                    [](std::span<const double> x) { return dixon2(x[0], x[1]); }, 51};
    // Grids for 3D and 5D are coarser so the space stays in the low thousands.
    reg["hartmann3"] = {"hartmann3", {{0.0, 1.0}, {0.0, 1.0}, {0.0, 1.0}}, hartmann3, 15};
    reg["rosenbrock5"] = {"rosenbrock5", std::vector<std::pair<double, double>>(5, {-5.0, 10.0}), rosenbrock, 6};
    return reg;
}

const std::map<std::string, BenchmarkFunction>& registry() {
    static const auto reg = make_registry();
    return reg;
}

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') {
            out += "'\\''";
        } else {
            out += c;
        }
    }
    return out + "'";
}

}  // namespace

double branin(double x1, double x2) {
    check_range("branin", x1, -5.0, 10.0);
    check_range("branin", x2, 0.0, 15.0);
    constexpr double pi = std::numbers::pi;
    constexpr double a = 1.0;
    constexpr double b = 5.1 / (4.0 * pi * pi);
    constexpr double c = 5.0 / pi;
    constexpr double r = 6.0;
    constexpr double s = 10.0;
    constexpr double t = 1.0 / (8.0 * pi);
    const double q = x2 - b * x1 * x1 + c * x1 - r;
    return a * q * q + s * (1.0 - t) * std::cos(x1) + s;
}

double hartmann3(std::span<const double> x) {
    if (x.size() != 3) {
        throw DomainError("hartmann3 takes 3 arguments");
    }
    static constexpr std::array<double, 4> alpha{1.0, 1.2, 3.0, 3.2};
    static constexpr std::array<std::array<double, 3>, 4> a{{{3.0, 10.0, 30.0},
                                                             {0.1, 10.0, 35.0},
                                                             {3.0, 10.0, 30.0},
                                                             {0.1, 10.0, 35.0}}};
    static constexpr std::array<std::array<double, 3>, 4> p{{{0.3689, 0.1170, 0.2673},
                                                             {0.4699, 0.4387, 0.7470},
                                                             {0.1091, 0.8732, 0.5547},
                                                             {0.0381, 0.5743, 0.8828}}};
    for (double v : x) {
        check_range("hartmann3", v, 0.0, 1.0);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < 4; ++i) {
        double inner = 0.0;
        for (std::size_t j = 0; j < 3; ++j) {
            inner += a[i][j] * (x[j] - p[i][j]) * (x[j] - p[i][j]);
        }
        sum += alpha[i] * std::exp(-inner);
    }
    return -sum;
}

double rosenbrock(std::span<const double> x) {
    if (x.size() < 2) {
        throw DomainError("rosenbrock needs at least 2 arguments");
    }
    for (double v : x) {
        check_range("rosenbrock", v, -5.0, 10.0);
    }
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < x.size(); ++i) {
        const double u = x[i + 1] - x[i] * x[i];
        sum += 100.0 * u * u + (1.0 - x[i]) * (1.0 - x[i]);
    }
    return sum;
}

double dixon2(double x1, double x2) {
    check_range("dixon2", x1, -10.0, 10.0);
    check_range("dixon2", x2, -10.0, 10.0);
    const double u = 2.0 * x2 * x2 - x1;
    return (x1 - 1.0) * (x1 - 1.0) + 2.0 * u * u;
}

const BenchmarkFunction& benchmark(const std::string& name) {
    const auto& reg = registry();
    const auto it = reg.find(name);
    if (it == reg.end()) {
        throw ConfigError("unknown benchmark function '" + name + "'");
    }
    return it->second;
}

std::vector<std::string> benchmark_names() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : registry()) {
        names.push_back(name);
    }
    return names;
}

GroundTruth scan_minimum(const ConfigSpace& space, const std::function<double(std::size_t)>& value) {
    GroundTruth truth;
    truth.minimum = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < space.size(); ++i) {
        const double v = value(i);
        if (v < truth.minimum) {
            truth.minimum = v;
            truth.index = i;
        }
    }
    truth.argmin = space.point_at(truth.index);
    return truth;
}

GridFunctionSource::GridFunctionSource(ConfigSpace space, std::shared_ptr<const std::vector<double>> values,
                                       double noise_sigma, std::uint64_t seed)
    : space_(std::move(space)), values_(std::move(values)), noise_sigma_(noise_sigma), rng_(seed) {
    if (!(noise_sigma_ >= 0.0)) {
        throw ConfigError("noise sigma must be nonnegative");
    }
    if (values_->size() != space_.size()) {
        throw ContractViolation("grid values do not cover the space");
    }
}

double GridFunctionSource::exact(const ConfigPoint& x) const {
    return (*values_)[space_.linear_index(x)];
}

double GridFunctionSource::measure(const ConfigPoint& x) {
    const double v = exact(x);
    if (noise_sigma_ == 0.0) {
        return v;
    }
    std::normal_distribution<double> noise(0.0, noise_sigma_);
    return v + noise(rng_);
}

std::unique_ptr<ResponseSource> GridFunctionSource::fork(std::uint64_t seed) const {
    return std::make_unique<GridFunctionSource>(space_, values_, noise_sigma_, seed);
}

std::vector<std::size_t> default_grid_sizes(const BenchmarkFunction& fn) {
    return std::vector<std::size_t>(fn.bounds.size(), fn.default_grid);
}

GridProblem make_grid_source(const BenchmarkFunction& fn, const std::vector<std::size_t>& grid_sizes,
                             double noise_sigma, std::uint64_t seed) {
    if (grid_sizes.size() != fn.bounds.size()) {
        throw ConfigError(fn.name + " needs " + std::to_string(fn.bounds.size()) + " grid sizes");
    }
    std::vector<ParameterDef> params;
    for (std::size_t l = 0; l < grid_sizes.size(); ++l) {
        const auto m = grid_sizes[l];
        if (m < 2) {
            throw ConfigError("grid sizes must be >= 2");
        }
        const auto [lo, hi] = fn.bounds[l];
        std::vector<double> values(m);
        for (std::size_t k = 0; k < m; ++k) {
            values[k] = k + 1 == m ? hi : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(m - 1);
        }
        params.push_back(ParameterDef::numeric("x" + std::to_string(l + 1), std::move(values)));
    }
    ConfigSpace space(std::move(params));
    auto values = std::make_shared<std::vector<double>>(space.size());
    for (std::size_t i = 0; i < space.size(); ++i) {
        const auto v = space.values(space.point_at(i));
        (*values)[i] = fn.fn(v);
    }
    GridProblem problem{space, nullptr, {}};
    problem.truth = scan_minimum(space, [&](std::size_t i) { return (*values)[i]; });
    problem.source = std::make_shared<GridFunctionSource>(space, values, noise_sigma, seed);
    return problem;
}

std::optional<double> replicate_sigma(const TabularDataset& data, const ConfigPoint& x) {
    const auto& s = data.replicates(x);
    if (s.size() < 2) {
        return std::nullopt;
    }
    double mean = 0.0;
    for (double v : s) {
        mean += v;
    }
    mean /= static_cast<double>(s.size());
    double ss = 0.0;
    for (double v : s) {
        ss += (v - mean) * (v - mean);
    }
    return std::sqrt(ss / static_cast<double>(s.size() - 1));
}

double pooled_noise_sigma(const TabularDataset& data) {
    double var_sum = 0.0;
    std::size_t count = 0;
    for (auto i : data.covered()) {
        if (const auto s = replicate_sigma(data, data.space().point_at(i))) {
            var_sum += *s * *s;
            ++count;
        }
    }
    return count == 0 ? 0.0 : std::sqrt(var_sum / static_cast<double>(count));
}

PlaybackSource::PlaybackSource(std::shared_ptr<const TabularDataset> data, NoiseSpec noise, std::uint64_t seed)
    : data_(std::move(data)), noise_(noise), rng_(seed) {
    if (!data_->is_total()) {
        throw CoverageError("dataset covers " + std::to_string(data_->row_count()) + " of " +
                            std::to_string(data_->space().size()) + " configurations");
    }
    if (noise_.mode == NoiseMode::fixed && !(noise_.sigma >= 0.0)) {
        throw ConfigError("noise sigma must be nonnegative");
    }
    pooled_ = pooled_noise_sigma(*data_);
}

double PlaybackSource::sigma_at(const ConfigPoint& x) const {
    switch (noise_.mode) {
        case NoiseMode::none:
            return 0.0;
        case NoiseMode::fixed:
            return noise_.sigma;
        case NoiseMode::replicates:
            return replicate_sigma(*data_, x).value_or(pooled_);
    }
    return 0.0;
}

double PlaybackSource::measure(const ConfigPoint& x) {
    const double v = *data_->value(x);
    const double sigma = sigma_at(x);
    if (sigma == 0.0) {
        return v;
    }
    std::normal_distribution<double> noise(0.0, sigma);
    return v + noise(rng_);
}

std::unique_ptr<ResponseSource> PlaybackSource::fork(std::uint64_t seed) const {
    return std::make_unique<PlaybackSource>(data_, noise_, seed);
}

ExternalCommandSource::ExternalCommandSource(ConfigSpace space, std::string command)
    : space_(std::move(space)), command_(std::move(command)) {
    if (command_.empty()) {
        throw ConfigError("external command must not be empty");
    }
}

double ExternalCommandSource::measure(const ConfigPoint& x) {
    space_.validate(x);
    std::string cmd = command_;
    for (std::size_t l = 0; l < space_.dims(); ++l) {
        const auto& p = space_.params()[l];
        cmd += ' ' + shell_quote(p.name() + '=' + p.labels()[x.coords[l]]);
    }
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
        throw MeasurementError("cannot start '" + command_ + "'");
    }
    std::string output;
    std::array<char, 256> buf{};
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) {
        output += buf.data();
    }
    const int status = ::pclose(pipe);
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw MeasurementError("measurement command failed for " + space_.describe(x));
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(output, &used);
        if (output.find_first_not_of(" \t\r\n", used) != std::string::npos || !std::isfinite(v)) {
            throw MeasurementError("unexpected output");
        }
        return v;
    } catch (const std::exception&) {
        throw MeasurementError("measurement command printed '" + output + "', expected one number");
    }
}

std::unique_ptr<ResponseSource> ExternalCommandSource::fork(std::uint64_t) const {
    return std::make_unique<ExternalCommandSource>(space_, command_);
}

}  // namespace autotune
