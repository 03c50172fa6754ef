#pragma once

#include <compare>
#include <cstddef>
#include <istream>
#include <optional>
#include <string>
#include <vector>

namespace autotune {

class KeyValueFile;

enum class ParamKind { integer_grid, categorical };

// One tunable parameter and its finite, ordered domain. Options are kept as
// the verbatim strings that appear in dataset files; integer-grid options
// also carry their numeric value.
class ParameterDef {
public:
    static ParameterDef numeric(std::string name, std::vector<double> values);
    static ParameterDef categorical(std::string name, std::vector<std::string> labels);
    // Parses option strings; integer-grid options must be numbers.
    static ParameterDef from_strings(std::string name, ParamKind kind, std::vector<std::string> options);

    [[nodiscard]] const std::string& name() const noexcept { return name_; }
    [[nodiscard]] ParamKind kind() const noexcept { return kind_; }
    [[nodiscard]] std::size_t size() const noexcept { return labels_.size(); }
    [[nodiscard]] const std::vector<std::string>& labels() const noexcept { return labels_; }
    // Numeric value of each option; for categorical parameters this is the index.
    [[nodiscard]] const std::vector<double>& values() const noexcept { return values_; }
    [[nodiscard]] std::optional<std::size_t> find(const std::string& label) const;

    bool interacting = false;

private:
    ParameterDef(std::string name, ParamKind kind, std::vector<std::string> labels, std::vector<double> values);

    std::string name_;
    ParamKind kind_;
    std::vector<std::string> labels_;
    std::vector<double> values_;
};

struct ConfigPoint {
    std::vector<std::size_t> coords;

    auto operator<=>(const ConfigPoint&) const = default;
};

// The Cartesian product of all parameter domains, enumerated row-major
// (last parameter varies fastest).
class ConfigSpace {
public:
    ConfigSpace() = default;
    explicit ConfigSpace(std::vector<ParameterDef> params);

    [[nodiscard]] const std::vector<ParameterDef>& params() const noexcept { return params_; }
    [[nodiscard]] std::size_t dims() const noexcept { return params_.size(); }
    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] std::optional<std::size_t> param_index(const std::string& name) const;

    [[nodiscard]] bool contains(const ConfigPoint& x) const noexcept;
    void validate(const ConfigPoint& x) const;

    [[nodiscard]] std::size_t linear_index(const ConfigPoint& x) const;
    [[nodiscard]] ConfigPoint point_at(std::size_t index) const;

    // Points within `radius` option steps per dimension, excluding x.
    // Categorical dimensions count any label change as distance 1.
    [[nodiscard]] std::vector<ConfigPoint> neighborhood(const ConfigPoint& x, std::size_t radius) const;

    // Raw option values of x (numeric values; categorical indices).
    [[nodiscard]] std::vector<double> values(const ConfigPoint& x) const;
    [[nodiscard]] std::string describe(const ConfigPoint& x) const;

private:
    std::vector<ParameterDef> params_;
    std::vector<std::size_t> strides_;
    std::size_t size_ = 0;
};

// Reads a space declaration:
//   parameter.<name> = <integer|categorical> <opt1>,<opt2>,...
//   interacting = <name>,<name>        (optional metadata)
ConfigSpace parse_space_declaration(const KeyValueFile& file);
ConfigSpace load_space_declaration(const std::string& path);

// Measured response grid. One aggregate value (mean of replicates) per
// configuration; the raw replicates are retained for noise estimation.
class TabularDataset {
public:
    explicit TabularDataset(ConfigSpace space);

    void add_measurement(const ConfigPoint& x, double latency);

    [[nodiscard]] const ConfigSpace& space() const noexcept { return space_; }
    [[nodiscard]] std::size_t row_count() const noexcept { return rows_; }
    [[nodiscard]] bool is_total() const noexcept { return rows_ == space_.size(); }
    [[nodiscard]] std::optional<double> value(const ConfigPoint& x) const;
    [[nodiscard]] const std::vector<double>& replicates(const ConfigPoint& x) const;
    // Linear indices of configurations that have at least one measurement.
    [[nodiscard]] std::vector<std::size_t> covered() const;

private:
    ConfigSpace space_;
    std::vector<std::vector<double>> samples_;
    std::vector<double> mean_;
    std::size_t rows_ = 0;
};

// CSV with header `<param>,...,latency`. Values must match the declared
// options verbatim. Errors carry the 1-based line number.
TabularDataset load_dataset(std::istream& in, const ConfigSpace& space);
TabularDataset load_dataset(const std::string& path, const ConfigSpace& space);

// Space implied by a dataset: one parameter per column, options are the
// distinct values seen. All-numeric columns become integer grids in
// ascending order; others are categorical in order of first appearance.
ConfigSpace infer_space(std::istream& in);
ConfigSpace infer_space(const std::string& path);

}  // namespace autotune
