#include "autotune/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "autotune/errors.hpp"

namespace autotune {

namespace {

constexpr double kZ975 = 1.959963984540054;

struct Columns {
    std::vector<std::vector<double>> params;
    std::vector<double> latency;
};

Columns dataset_columns(const TabularDataset& data) {
    const auto& space = data.space();
    Columns c;
    c.params.resize(space.dims());
    for (auto i : data.covered()) {
        const auto x = space.point_at(i);
        const auto v = space.values(x);
        for (std::size_t l = 0; l < v.size(); ++l) {
            c.params[l].push_back(v[l]);
        }
        c.latency.push_back(*data.value(x));
    }
    return c;
}

MeritReport merit_from(const Columns& cols, const std::vector<std::vector<double>>& corr_pp,
                       const std::vector<double>& corr_lp, const std::vector<bool>& degenerate,
                       std::vector<std::size_t> subset) {
    MeritReport r;
    std::sort(subset.begin(), subset.end());
    r.subset = subset;
    const double n = static_cast<double>(subset.size());
    double lp = 0.0;
    for (auto l : subset) {
        r.correlations.push_back(corr_lp[l]);
        lp += std::abs(corr_lp[l]);
        if (degenerate[l]) {
            r.zero_variance.push_back(l);
        }
    }
    r.mean_label_correlation = lp / n;
    double pp = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < subset.size(); ++i) {
        for (std::size_t j = i + 1; j < subset.size(); ++j) {
            pp += std::abs(corr_pp[subset[i]][subset[j]]);
            ++pairs;
        }
    }
    r.mean_inter_correlation = pairs == 0 ? 0.0 : pp / static_cast<double>(pairs);
    r.merit = n * r.mean_label_correlation / std::sqrt(n + n * (n - 1.0) * r.mean_inter_correlation);
    (void)cols;
    return r;
}

struct Correlations {
    std::vector<double> lp;
    std::vector<std::vector<double>> pp;
    std::vector<bool> degenerate;
};

Correlations correlations(const Columns& cols) {
    const auto d = cols.params.size();
    Correlations c;
    c.lp.resize(d);
    c.degenerate.assign(d, false);
    c.pp.assign(d, std::vector<double>(d, 0.0));
    for (std::size_t l = 0; l < d; ++l) {
        bool flat = false;
        c.lp[l] = pearson(cols.params[l], cols.latency, &flat);
        c.degenerate[l] = flat;
        for (std::size_t k = l + 1; k < d; ++k) {
            c.pp[l][k] = c.pp[k][l] = pearson(cols.params[l], cols.params[k]);
        }
    }
    return c;
}

void check_rows(const TabularDataset& data) {
    if (data.row_count() < 3) {
        throw ContractViolation("merit needs at least 3 dataset rows");
    }
}

bool ranks_before(const MeritReport& a, const MeritReport& b) {
    if (a.merit != b.merit) {
        return a.merit > b.merit;
    }
    if (a.subset.size() != b.subset.size()) {
        return a.subset.size() < b.subset.size();
    }
    return a.subset < b.subset;
}

// Chi-square quantile, Wilson-Hilferty approximation.
double chi2_quantile(double dof, double z) {
    const double h = 2.0 / (9.0 * dof);
    const double base = 1.0 - h + z * std::sqrt(h);
    return dof * base * base * base;
}

}  // namespace

double pearson(std::span<const double> a, std::span<const double> b, bool* degenerate) {
    if (a.size() != b.size()) {
        throw ContractViolation("pearson: length mismatch");
    }
    const auto n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    if (!(saa > 0.0) || !(sbb > 0.0)) {
        if (degenerate != nullptr) {
            *degenerate = true;
        }
        return 0.0;
    }
    if (degenerate != nullptr) {
        *degenerate = false;
    }
    return std::clamp(sab / std::sqrt(saa * sbb), -1.0, 1.0);
}

MeritReport merit(const TabularDataset& data, std::vector<std::size_t> subset) {
    check_rows(data);
    if (subset.empty()) {
        throw ContractViolation("merit needs a nonempty subset");
    }
    std::set<std::size_t> unique(subset.begin(), subset.end());
    if (unique.size() != subset.size() || *unique.rbegin() >= data.space().dims()) {
        throw ContractViolation("merit subset must hold distinct valid parameter indices");
    }
    const auto cols = dataset_columns(data);
    const auto c = correlations(cols);
    return merit_from(cols, c.pp, c.lp, c.degenerate, std::move(subset));
}

std::vector<MeritReport> rank_subsets(const TabularDataset& data, std::size_t max_subset_size,
                                      std::size_t beam_width) {
    check_rows(data);
    const auto d = data.space().dims();
    if (max_subset_size < 1 || max_subset_size > d) {
        throw ContractViolation("max subset size must be in [1, d]");
    }
    const auto cols = dataset_columns(data);
    const auto c = correlations(cols);
    std::vector<MeritReport> out;
    if (d <= 12) {
        for (std::uint32_t mask = 1; mask < (1u << d); ++mask) {
            if (static_cast<std::size_t>(std::popcount(mask)) > max_subset_size) {
                continue;
            }
            std::vector<std::size_t> subset;
            for (std::size_t l = 0; l < d; ++l) {
                if ((mask >> l) & 1u) {
                    subset.push_back(l);
                }
            }
            out.push_back(merit_from(cols, c.pp, c.lp, c.degenerate, std::move(subset)));
        }
    } else {
        // Beam search: grow the best subsets of each size by one parameter.
        std::set<std::vector<std::size_t>> seen;
        std::vector<MeritReport> frontier;
        for (std::size_t l = 0; l < d; ++l) {
            frontier.push_back(merit_from(cols, c.pp, c.lp, c.degenerate, {l}));
            seen.insert({l});
        }
        for (std::size_t size = 1; size <= max_subset_size && !frontier.empty(); ++size) {
            std::sort(frontier.begin(), frontier.end(), ranks_before);
            if (frontier.size() > beam_width) {
                frontier.resize(beam_width);
            }
            out.insert(out.end(), frontier.begin(), frontier.end());
            std::vector<MeritReport> next;
            for (const auto& r : frontier) {
                for (std::size_t l = 0; l < d; ++l) {
                    auto grown = r.subset;
                    if (std::find(grown.begin(), grown.end(), l) != grown.end()) {
                        continue;
                    }
                    grown.push_back(l);
                    std::sort(grown.begin(), grown.end());
                    if (seen.insert(grown).second) {
                        next.push_back(merit_from(cols, c.pp, c.lp, c.degenerate, grown));
                    }
                }
            }
            frontier = std::move(next);
        }
    }
    std::sort(out.begin(), out.end(), ranks_before);
    return out;
}

SnrRow snr_row(const std::string& family, std::span<const double> samples) {
    if (samples.size() < 2) {
        throw ContractViolation("signal-to-noise needs at least two samples");
    }
    SnrRow row;
    row.family = family;
    row.samples = samples.size();
    const auto n = static_cast<double>(samples.size());
    row.mean = std::accumulate(samples.begin(), samples.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : samples) {
        ss += (v - row.mean) * (v - row.mean);
    }
    row.sigma = std::sqrt(ss / (n - 1.0));
    row.ratio = row.sigma > 0.0 ? row.mean / row.sigma : std::numeric_limits<double>::infinity();
    const double half = kZ975 * row.sigma / std::sqrt(n);
    row.mean_ci = {row.mean - half, row.mean + half};
    const double dof = n - 1.0;
    row.sigma_ci = {row.sigma * std::sqrt(dof / chi2_quantile(dof, kZ975)),
                    row.sigma * std::sqrt(dof / std::max(chi2_quantile(dof, -kZ975), 1e-300))};
    return row;
}

std::vector<SnrRow> snr(const std::vector<std::pair<std::string, std::vector<double>>>& families,
                        std::vector<std::string>* warnings) {
    std::vector<SnrRow> rows;
    for (const auto& [name, samples] : families) {
        if (samples.size() < 2) {
            if (warnings != nullptr) {
                warnings->push_back("family '" + name + "' has fewer than two replicates; skipped");
            }
            continue;
        }
        rows.push_back(snr_row(name, samples));
    }
    return rows;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) {
        throw ContractViolation("quantile of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    if (frac == 0.0) {
        return values[lo];
    }
    return values[lo] + frac * (values[hi] - values[lo]);
}

std::vector<double> distance_series(const RunTrace& trace, double ground_truth) {
    std::vector<double> out;
    out.reserve(trace.records.size());
    for (const auto& r : trace.records) {
        out.push_back(std::abs(r.best - ground_truth));
    }
    return out;
}

std::size_t first_hit(const RunTrace& trace, double ground_truth, double tol) {
    for (const auto& r : trace.records) {
        if (std::abs(r.best - ground_truth) <= tol) {
            return r.t;
        }
    }
    return 0;
}

AggregateReport distance_curve(const std::vector<RunTrace>& traces, double ground_truth) {
    AggregateReport report;
    report.replications = traces.size();
    if (traces.empty()) {
        return report;
    }
    report.algorithm = traces.front().algorithm;
    std::size_t shortest = traces.front().records.size();
    for (const auto& t : traces) {
        shortest = std::min(shortest, t.records.size());
    }
    for (const auto& t : traces) {
        if (t.records.size() != shortest) {
            report.warnings.push_back("traces differ in length; aligned to the shortest (" +
                                      std::to_string(shortest) + ")");
            break;
        }
    }
    // Deterministic regardless of trace order: sort the series first.
    std::vector<std::vector<double>> series;
    for (const auto& t : traces) {
        series.push_back(distance_series(t, ground_truth));
    }
    report.per_iteration.resize(shortest);
    for (std::size_t i = 0; i < shortest; ++i) {
        std::vector<double> column;
        for (const auto& s : series) {
            column.push_back(s[i]);
        }
        std::sort(column.begin(), column.end());
        CurveStats st;
        st.mean = std::accumulate(column.begin(), column.end(), 0.0) / static_cast<double>(column.size());
        st.median = quantile(column, 0.5);
        st.q25 = quantile(column, 0.25);
        st.q75 = quantile(column, 0.75);
        st.min = column.front();
        st.max = column.back();
        report.per_iteration[i] = st;
    }
    return report;
}

HoldoutReport holdout_accuracy(const GpModel& model, const TabularDataset& data) {
    HoldoutReport report;
    const auto& space = data.space();
    std::vector<bool> trained(space.size(), false);
    for (const auto& x : model.train().points) {
        trained[space.linear_index(x)] = true;
    }
    double sse = 0.0;
    for (auto i : data.covered()) {
        if (trained[i]) {
            continue;
        }
        const auto x = space.point_at(i);
        const double y = *data.value(x);
        const double yhat = model.predict(x).mean;
        sse += (yhat - y) * (yhat - y);
        ++report.evaluated;
        if (y == 0.0) {
            report.excluded.push_back(i);
        } else {
            report.abs_pct_error.push_back(100.0 * std::abs(yhat - y) / std::abs(y));
        }
    }
    report.rmse = report.evaluated == 0 ? 0.0 : std::sqrt(sse / static_cast<double>(report.evaluated));
    return report;
}

}  // namespace autotune
