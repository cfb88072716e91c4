#pragma once

// Reference computations that share no code with the library.

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace sdlt::testing {

/// Probability that a walk started at `k`, stepping -1 w.p. q and +1 w.p. p,
/// first reaches 0 at exactly step n, for every n <= horizon, by enumerating
/// all 2^horizon step sequences.
inline std::vector<double> enumerate_first_passage(double p, double q, unsigned k, unsigned horizon) {
  std::vector<double> first(horizon + 1, 0.0);
  if (k == 0) {
    first[0] = 1.0;
    return first;
  }
  const std::uint64_t paths = std::uint64_t{1} << horizon;
  for (std::uint64_t bits = 0; bits < paths; ++bits) {
    long pos = k;
    double prob = 1.0;
    for (unsigned n = 1; n <= horizon; ++n) {
      const bool down = bits >> (n - 1) & 1U;
      pos += down ? -1 : 1;
      prob *= down ? q : p;
      if (pos == 0) {
        // Every completion of this prefix has total weight 1, and the prefix
        // is counted once per completion, so divide by their number.
        first[n] += prob / static_cast<double>(std::uint64_t{1} << (horizon - n));
        break;
      }
    }
  }
  return first;
}

inline double binomial(unsigned n, unsigned r) {
  if (r > n) return 0.0;
  return std::exp(std::lgamma(n + 1.0) - std::lgamma(r + 1.0) - std::lgamma(n - r + 1.0));
}

/// Hitting-time formula: P(first passage from k to 0 at step n) =
/// (k / n) * C(n, (n + k) / 2) * q^((n + k) / 2) * p^((n - k) / 2).
inline double hitting_time(double p, double q, unsigned k, unsigned n) {
  if (n < k || (n - k) % 2 != 0) return 0.0;
  const unsigned down = (n + k) / 2;
  const unsigned up = (n - k) / 2;
  // Log space keeps C(n, down) from overflowing for large n.
  const double log_term = std::lgamma(n + 1.0) - std::lgamma(down + 1.0) - std::lgamma(up + 1.0) +
                          down * std::log(q) + (up == 0 ? 0.0 : up * std::log(p));
  return static_cast<double>(k) / n * std::exp(log_term);
}

/// Σ_n hitting_time(p, q, k, n) up to `horizon`.
inline double catchup_series(double p, double q, unsigned k, unsigned horizon) {
  if (k == 0) return 1.0;
  double total = 0.0;
  for (unsigned n = k; n <= horizon; ++n) total += hitting_time(p, q, k, n);
  return total;
}

/// Binomial standard deviation of a rate estimated from n trials.
inline double binomial_sigma(double rate, std::uint64_t n) {
  return std::sqrt(rate * (1.0 - rate) / static_cast<double>(n));
}

}  // namespace sdlt::testing
