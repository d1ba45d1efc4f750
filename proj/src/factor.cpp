#include "tileforge/factor.hpp"

#include <algorithm>

namespace tileforge {

std::vector<std::int64_t> divisors(std::int64_t n) {
  std::vector<std::int64_t> low, high;
  for (std::int64_t d = 1; d * d <= n; ++d) {
    if (n % d) continue;
    low.push_back(d);
    if (d != n / d) high.push_back(n / d);
  }
  low.insert(low.end(), high.rbegin(), high.rend());
  return low;
}

std::vector<FactorTriple> enumerate_factor_triples(std::int64_t tc) {
  std::vector<FactorTriple> out;
  for (std::int64_t t0 : divisors(tc)) {
    std::int64_t rest = tc / t0;
    for (std::int64_t t1 : divisors(rest)) out.push_back({t0, t1, rest / t1});
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::int64_t burst_width_bits(std::int64_t row_bits, std::int64_t cap) {
  std::int64_t b = 1;
  while (b * 2 <= cap && row_bits % (b * 2) == 0) b *= 2;
  return b;
}

}  // namespace tileforge
