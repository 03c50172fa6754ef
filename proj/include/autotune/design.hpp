#pragma once

#include <vector>

#include "autotune/random.hpp"
#include "autotune/space.hpp"

namespace autotune {

struct InitialDesign {
    std::vector<ConfigPoint> points;

    [[nodiscard]] std::size_t size() const noexcept { return points.size(); }
};

// Bounds [first, last) of stratum k when `options` option indices are split
// into `n` equal-width strata.
std::pair<std::size_t, std::size_t> stratum_bounds(std::size_t options, std::size_t n, std::size_t k);

// Latin hypercube design over option indices. Dimensions with at least n
// options receive one point per stratum; smaller dimensions use each option
// as evenly as possible. Points are distinct.
InitialDesign lhd_sample(const ConfigSpace& space, std::size_t n, Rng& rng);

}  // namespace autotune
