#include "autotune/space.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include "autotune/errors.hpp"
#include "autotune/keyvalue.hpp"

namespace autotune {

namespace {

std::optional<double> parse_number(const std::string& s) {
    if (s.empty()) {
        return std::nullopt;
    }
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) {
            return std::nullopt;
        }
        return v;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

std::string format_value(double v) {
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

}  // namespace

ParameterDef::ParameterDef(std::string name, ParamKind kind, std::vector<std::string> labels,
                           std::vector<double> values)
    : name_(std::move(name)), kind_(kind), labels_(std::move(labels)), values_(std::move(values)) {
    if (name_.empty()) {
        throw ConfigError("parameter name must not be empty");
    }
    if (labels_.empty()) {
        throw ConfigError("parameter '" + name_ + "' has no options");
    }
    std::set<std::string> seen(labels_.begin(), labels_.end());
    if (seen.size() != labels_.size()) {
        throw ConfigError("parameter '" + name_ + "' has duplicate options");
    }
    if (kind_ == ParamKind::integer_grid) {
        for (std::size_t i = 1; i < values_.size(); ++i) {
            if (!(values_[i] > values_[i - 1])) {
                throw ConfigError("options of '" + name_ + "' must be strictly increasing");
            }
        }
    }
}

ParameterDef ParameterDef::numeric(std::string name, std::vector<double> values) {
    std::vector<std::string> labels;
    labels.reserve(values.size());
    for (double v : values) {
        labels.push_back(format_value(v));
    }
    return ParameterDef(std::move(name), ParamKind::integer_grid, std::move(labels), std::move(values));
}

ParameterDef ParameterDef::categorical(std::string name, std::vector<std::string> labels) {
    std::vector<double> values(labels.size());
    std::iota(values.begin(), values.end(), 0.0);
    return ParameterDef(std::move(name), ParamKind::categorical, std::move(labels), std::move(values));
}

ParameterDef ParameterDef::from_strings(std::string name, ParamKind kind, std::vector<std::string> options) {
    if (kind == ParamKind::categorical) {
        return categorical(std::move(name), std::move(options));
    }
    std::vector<double> values;
    values.reserve(options.size());
    for (const auto& o : options) {
        const auto v = parse_number(o);
        if (!v) {
            throw ConfigError("option '" + o + "' of '" + name + "' is not numeric");
        }
        values.push_back(*v);
    }
    return ParameterDef(std::move(name), kind, std::move(options), std::move(values));
}

std::optional<std::size_t> ParameterDef::find(const std::string& label) const {
    const auto it = std::find(labels_.begin(), labels_.end(), label);
    if (it == labels_.end()) {
        return std::nullopt;
    }
    return static_cast<std::size_t>(it - labels_.begin());
}

ConfigSpace::ConfigSpace(std::vector<ParameterDef> params) : params_(std::move(params)) {
    if (params_.empty()) {
        throw ConfigError("configuration space needs at least one parameter");
    }
    std::set<std::string> names;
    for (const auto& p : params_) {
        if (!names.insert(p.name()).second) {
            throw ConfigError("duplicate parameter name '" + p.name() + "'");
        }
    }
    strides_.assign(params_.size(), 1);
    size_ = 1;
    for (std::size_t i = params_.size(); i-- > 0;) {
        strides_[i] = size_;
        size_ *= params_[i].size();
    }
}

std::optional<std::size_t> ConfigSpace::param_index(const std::string& name) const {
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (params_[i].name() == name) {
            return i;
        }
    }
    return std::nullopt;
}

bool ConfigSpace::contains(const ConfigPoint& x) const noexcept {
    if (x.coords.size() != params_.size()) {
        return false;
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (x.coords[i] >= params_[i].size()) {
            return false;
        }
    }
    return true;
}

void ConfigSpace::validate(const ConfigPoint& x) const {
    if (x.coords.size() != params_.size()) {
        throw InvalidPointError("point has " + std::to_string(x.coords.size()) + " coordinates, space has " +
                                std::to_string(params_.size()));
    }
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (x.coords[i] >= params_[i].size()) {
            throw InvalidPointError("coordinate " + std::to_string(x.coords[i]) + " out of range for '" +
                                    params_[i].name() + "'");
        }
    }
}

std::size_t ConfigSpace::linear_index(const ConfigPoint& x) const {
    validate(x);
    std::size_t index = 0;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        index += x.coords[i] * strides_[i];
    }
    return index;
}

ConfigPoint ConfigSpace::point_at(std::size_t index) const {
    if (index >= size_) {
        throw InvalidPointError("linear index " + std::to_string(index) + " out of range");
    }
    ConfigPoint x;
    x.coords.resize(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        x.coords[i] = index / strides_[i];
        index %= strides_[i];
    }
    return x;
}

std::vector<ConfigPoint> ConfigSpace::neighborhood(const ConfigPoint& x, std::size_t radius) const {
    validate(x);
    if (radius == 0) {
        throw ContractViolation("neighborhood radius must be >= 1");
    }
    std::vector<std::vector<std::size_t>> choices(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const auto m = params_[i].size();
        if (params_[i].kind() == ParamKind::categorical) {
            choices[i].resize(m);
            std::iota(choices[i].begin(), choices[i].end(), std::size_t{0});
        } else {
            const auto lo = x.coords[i] >= radius ? x.coords[i] - radius : 0;
            const auto hi = std::min(m - 1, x.coords[i] + radius);
            for (auto c = lo; c <= hi; ++c) {
                choices[i].push_back(c);
            }
        }
    }
    std::vector<ConfigPoint> out;
    std::vector<std::size_t> cursor(params_.size(), 0);
    while (true) {
        ConfigPoint y;
        y.coords.resize(params_.size());
        for (std::size_t i = 0; i < params_.size(); ++i) {
            y.coords[i] = choices[i][cursor[i]];
        }
        if (y != x) {
            out.push_back(std::move(y));
        }
        std::size_t dim = params_.size();
        while (dim-- > 0) {
            if (++cursor[dim] < choices[dim].size()) {
                break;
            }
            cursor[dim] = 0;
        }
        if (dim == static_cast<std::size_t>(-1)) {
            break;
        }
    }
    return out;
}

std::vector<double> ConfigSpace::values(const ConfigPoint& x) const {
    validate(x);
    std::vector<double> v(params_.size());
    for (std::size_t i = 0; i < params_.size(); ++i) {
        v[i] = params_[i].values()[x.coords[i]];
    }
    return v;
}

std::string ConfigSpace::describe(const ConfigPoint& x) const {
    validate(x);
    std::string s;
    for (std::size_t i = 0; i < params_.size(); ++i) {
        if (i > 0) {
            s += ' ';
        }
        s += params_[i].name() + '=' + params_[i].labels()[x.coords[i]];
    }
    return s;
}

ConfigSpace parse_space_declaration(const KeyValueFile& file) {
    static constexpr std::string_view prefix = "parameter.";
    std::vector<ParameterDef> params;
    std::vector<std::string> interacting;
    for (const auto& e : file.entries()) {
        if (e.key.starts_with(prefix)) {
            const auto name = e.key.substr(prefix.size());
            const auto space = e.value.find_first_of(" \t");
            if (space == std::string::npos) {
                throw ConfigError("line " + std::to_string(e.line) + ": expected '<kind> <options>'");
            }
            const auto kind_text = e.value.substr(0, space);
            ParamKind kind;
            if (kind_text == "integer" || kind_text == "integer-grid" || kind_text == "numeric") {
                kind = ParamKind::integer_grid;
            } else if (kind_text == "categorical") {
                kind = ParamKind::categorical;
            } else {
                throw ConfigError("line " + std::to_string(e.line) + ": unknown parameter kind '" + kind_text + "'");
            }
            params.push_back(ParameterDef::from_strings(name, kind, split(e.value.substr(space + 1), ',')));
        } else if (e.key == "interacting") {
            for (auto& n : split(e.value, ',')) {
                interacting.push_back(std::move(n));
            }
        } else {
            throw ConfigError("line " + std::to_string(e.line) + ": unknown key '" + e.key + "'");
        }
    }
    for (const auto& n : interacting) {
        auto it = std::find_if(params.begin(), params.end(), [&](const ParameterDef& p) { return p.name() == n; });
        if (it == params.end()) {
            throw ConfigError("interacting parameter '" + n + "' is not declared");
        }
        it->interacting = true;
    }
    return ConfigSpace(std::move(params));
}

ConfigSpace load_space_declaration(const std::string& path) {
    return parse_space_declaration(KeyValueFile::load(path));
}

TabularDataset::TabularDataset(ConfigSpace space)
    : space_(std::move(space)), samples_(space_.size()), mean_(space_.size(), 0.0) {}

void TabularDataset::add_measurement(const ConfigPoint& x, double latency) {
    const auto i = space_.linear_index(x);
    auto& s = samples_[i];
    if (s.empty()) {
        ++rows_;
    }
    s.push_back(latency);
    mean_[i] = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

std::optional<double> TabularDataset::value(const ConfigPoint& x) const {
    const auto i = space_.linear_index(x);
    if (samples_[i].empty()) {
        return std::nullopt;
    }
    return mean_[i];
}

const std::vector<double>& TabularDataset::replicates(const ConfigPoint& x) const {
    return samples_[space_.linear_index(x)];
}

std::vector<std::size_t> TabularDataset::covered() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < samples_.size(); ++i) {
        if (!samples_[i].empty()) {
            out.push_back(i);
        }
    }
    return out;
}

TabularDataset load_dataset(std::istream& in, const ConfigSpace& space) {
    std::string line;
    std::size_t row = 0;
    std::vector<std::size_t> column_param;
    bool have_header = false;
    TabularDataset data(space);
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (!have_header) {
            if (cells.size() != space.dims() + 1 || cells.back() != "latency") {
                throw ParseError(row, "header must list every parameter followed by 'latency'");
            }
            std::vector<bool> seen(space.dims(), false);
            for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
                const auto idx = space.param_index(cells[c]);
                if (!idx) {
                    throw ParseError(row, "unknown parameter column '" + cells[c] + "'");
                }
                if (seen[*idx]) {
                    throw ParseError(row, "duplicate parameter column '" + cells[c] + "'");
                }
                seen[*idx] = true;
                column_param.push_back(*idx);
            }
            have_header = true;
            continue;
        }
        if (cells.size() != column_param.size() + 1) {
            throw ParseError(row, "expected " + std::to_string(column_param.size() + 1) + " fields, got " +
                                      std::to_string(cells.size()));
        }
        ConfigPoint x;
        x.coords.resize(space.dims());
        for (std::size_t c = 0; c < column_param.size(); ++c) {
            const auto& p = space.params()[column_param[c]];
            const auto opt = p.find(cells[c]);
            if (!opt) {
                throw ParseError(row, "value '" + cells[c] + "' not in domain of '" + p.name() + "'");
            }
            x.coords[column_param[c]] = *opt;
        }
        const auto latency = parse_number(cells.back());
        if (!latency) {
            throw ParseError(row, "non-numeric latency '" + cells.back() + "'");
        }
        data.add_measurement(x, *latency);
    }
    if (!have_header) {
        throw ParseError(row, "missing header");
    }
    return data;
}

TabularDataset load_dataset(const std::string& path, const ConfigSpace& space) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open dataset " + path);
    }
    return load_dataset(in, space);
}

ConfigSpace infer_space(std::istream& in) {
    std::string line;
    std::size_t row = 0;
    std::vector<std::string> names;
    std::vector<std::vector<std::string>> seen;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) {
            continue;
        }
        const auto cells = split(line, ',');
        if (names.empty()) {
            if (cells.size() < 2 || cells.back() != "latency") {
                throw ParseError(row, "header must list the parameters followed by 'latency'");
            }
            names.assign(cells.begin(), cells.end() - 1);
            seen.resize(names.size());
            continue;
        }
        if (cells.size() != names.size() + 1) {
            throw ParseError(row, "expected " + std::to_string(names.size() + 1) + " fields, got " +
                                      std::to_string(cells.size()));
        }
        for (std::size_t c = 0; c < names.size(); ++c) {
            if (std::find(seen[c].begin(), seen[c].end(), cells[c]) == seen[c].end()) {
                seen[c].push_back(cells[c]);
            }
        }
    }
    if (names.empty()) {
        throw ParseError(row, "missing header");
    }
    if (seen.front().empty()) {
        throw ParseError(row, "dataset has no rows");
    }
    std::vector<ParameterDef> params;
    for (std::size_t c = 0; c < names.size(); ++c) {
        auto& opts = seen[c];
        const bool numeric = std::all_of(opts.begin(), opts.end(), [](const auto& o) { return parse_number(o).has_value(); });
        if (numeric) {
            std::sort(opts.begin(), opts.end(),
                      [](const auto& a, const auto& b) { return *parse_number(a) < *parse_number(b); });
            params.push_back(ParameterDef::from_strings(names[c], ParamKind::integer_grid, opts));
        } else {
            params.push_back(ParameterDef::categorical(names[c], opts));
        }
    }
    return ConfigSpace(std::move(params));
}

ConfigSpace infer_space(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open dataset " + path);
    }
    return infer_space(in);
}

}  // namespace autotune
