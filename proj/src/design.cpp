#include "autotune/design.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "autotune/errors.hpp"

namespace autotune {

namespace {

constexpr int kMaxRepermutations = 200;

std::vector<std::size_t> draw_column(std::size_t options, std::size_t n, Rng& rng) {
    std::vector<std::size_t> column;
    column.reserve(n);
    if (options >= n) {
        std::vector<std::size_t> strata(n);
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        std::shuffle(strata.begin(), strata.end(), rng);
        for (auto k : strata) {
            const auto [lo, hi] = stratum_bounds(options, n, k);
            std::uniform_int_distribution<std::size_t> pick(lo, hi - 1);
            column.push_back(pick(rng));
        }
        return column;
    }
    // Fewer options than points: every option appears n / options times and
    // a random subset of them once more.
    std::vector<std::size_t> order(options);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    const auto base = n / options;
    const auto extra = n % options;
    for (std::size_t o = 0; o < options; ++o) {
        const auto count = base + (o < extra ? 1 : 0);
        column.insert(column.end(), count, order[o]);
    }
    std::shuffle(column.begin(), column.end(), rng);
    return column;
}

std::vector<std::size_t> duplicated_rows(const std::vector<std::vector<std::size_t>>& columns, std::size_t n) {
    std::set<std::vector<std::size_t>> seen;
    std::vector<std::size_t> dups;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<std::size_t> row(columns.size());
        for (std::size_t d = 0; d < columns.size(); ++d) {
            row[d] = columns[d][i];
        }
        if (!seen.insert(std::move(row)).second) {
            dups.push_back(i);
        }
    }
    return dups;
}

}  // namespace

std::pair<std::size_t, std::size_t> stratum_bounds(std::size_t options, std::size_t n, std::size_t k) {
    return {k * options / n, (k + 1) * options / n};
}

InitialDesign lhd_sample(const ConfigSpace& space, std::size_t n, Rng& rng) {
    if (n == 0 || n > space.size()) {
        throw InfeasibleDesignError("design size " + std::to_string(n) + " infeasible for space of " +
                                    std::to_string(space.size()) + " points");
    }
    const auto d = space.dims();
    std::vector<std::vector<std::size_t>> columns(d);
    for (std::size_t k = 0; k < d; ++k) {
        columns[k] = draw_column(space.params()[k].size(), n, rng);
    }

    auto dups = duplicated_rows(columns, n);
    std::uniform_int_distribution<std::size_t> pick_dim(0, d - 1);
    for (int attempt = 0; !dups.empty() && attempt < kMaxRepermutations; ++attempt) {
        const auto k = pick_dim(rng);
        columns[k] = draw_column(space.params()[k].size(), n, rng);
        dups = duplicated_rows(columns, n);
    }

    InitialDesign design;
    design.points.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        design.points[i].coords.resize(d);
        for (std::size_t k = 0; k < d; ++k) {
            design.points[i].coords[k] = columns[k][i];
        }
    }
    if (!dups.empty()) {
        // Stratification could not be kept; replace the colliding rows with
        // uniformly chosen unused points.
        std::set<std::size_t> used;
        for (std::size_t i = 0; i < n; ++i) {
            if (std::find(dups.begin(), dups.end(), i) == dups.end()) {
                used.insert(space.linear_index(design.points[i]));
            }
        }
        std::uniform_int_distribution<std::size_t> pick_index(0, space.size() - 1);
        for (auto i : dups) {
            std::size_t idx = pick_index(rng);
            while (used.count(idx) != 0) {
                idx = pick_index(rng);
            }
            used.insert(idx);
            design.points[i] = space.point_at(idx);
        }
    }
    return design;
}

}  // namespace autotune
