// Exact dyadic rationals num / 2^exp, kept in lowest terms.
#pragma once

#include <cstdint>
#include <string>

namespace dlacs {

class Dyadic {
 public:
  /// Largest exponent representable; operations that would exceed it throw
  /// std::overflow_error.
  static constexpr std::uint32_t kMaxExponent = 62;

  constexpr Dyadic() = default;
  /// num / 2^exp. Throws std::overflow_error if exp > kMaxExponent after reduction.
  Dyadic(std::uint64_t num, std::uint32_t exp);

  static Dyadic one() { return Dyadic(1, 0); }

  std::uint64_t numerator() const noexcept { return num_; }
  std::uint32_t exponent() const noexcept { return exp_; }
  double to_double() const noexcept;
  std::string to_string() const;

  friend bool operator==(const Dyadic&, const Dyadic&) = default;

 private:
  std::uint64_t num_ = 0;
  std::uint32_t exp_ = 0;
};

/// a + b - (3/2) a b for probabilities a, b in [0, 1].
Dyadic gate_combine(const Dyadic& a, const Dyadic& b);

}  // namespace dlacs
