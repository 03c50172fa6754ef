#pragma once

#include <cstdint>
#include <random>

namespace autotune {

// Every stochastic routine takes an explicit engine so runs replay exactly.
using Rng = std::mt19937_64;

}  // namespace autotune
