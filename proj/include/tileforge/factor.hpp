#pragma once

#include <cstdint>
#include <vector>

namespace tileforge {

struct FactorTriple {
  std::int64_t t0 = 1, t1 = 1, t2 = 1;
  auto operator<=>(const FactorTriple&) const = default;
};

// Divisors of n in increasing order.
std::vector<std::int64_t> divisors(std::int64_t n);

// All ordered triples (t0,t1,t2) with t0*t1*t2 == tc, lexicographically
// sorted; cardinality is the 3-Dirichlet divisor count d3(tc).
std::vector<FactorTriple> enumerate_factor_triples(std::int64_t tc);

// Largest power-of-two bitwidth <= cap dividing row_bits.
std::int64_t burst_width_bits(std::int64_t row_bits, std::int64_t cap = 512);

}  // namespace tileforge
