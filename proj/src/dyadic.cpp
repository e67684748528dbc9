#include "dlacs/dyadic.hpp"

#include <cmath>
#include <stdexcept>

namespace dlacs {

namespace {
__extension__ using u128 = unsigned __int128;
}

Dyadic::Dyadic(std::uint64_t num, std::uint32_t exp) : num_(num), exp_(exp) {
  if (num_ == 0) {
    exp_ = 0;
  } else {
    while (exp_ > 0 && (num_ & 1U) == 0) {
      num_ >>= 1;
      --exp_;
    }
  }
  if (exp_ > kMaxExponent) throw std::overflow_error("dyadic exponent exceeds 62");
}

double Dyadic::to_double() const noexcept { return std::ldexp(static_cast<double>(num_), -static_cast<int>(exp_)); }

std::string Dyadic::to_string() const {
  return std::to_string(num_) + "/2^" + std::to_string(exp_);
}

Dyadic gate_combine(const Dyadic& a, const Dyadic& b) {
  // a = x / 2^i, b = y / 2^j:
  // a + b - 3ab/2 = (x 2^{j+1} + y 2^{i+1} - 3xy) / 2^{i+j+1}
  const std::uint32_t i = a.exponent();
  const std::uint32_t j = b.exponent();
  if (i + j + 1 > 126) throw std::overflow_error("dyadic exponent exceeds 62");
  const u128 x = a.numerator();
  const u128 y = b.numerator();
  const u128 plus = (x << (j + 1)) + (y << (i + 1));
  const u128 minus = 3 * x * y;
  if (minus > plus) throw std::domain_error("gate_combine: arguments outside [0, 1]");
  u128 num = plus - minus;
  std::uint32_t exp = i + j + 1;
  while (exp > 0 && num != 0 && (num & 1U) == 0) {
    num >>= 1;
    --exp;
  }
  if (num == 0) exp = 0;
  if (exp > Dyadic::kMaxExponent || num > ~std::uint64_t{0})
    throw std::overflow_error("dyadic exponent exceeds 62");
  return Dyadic(static_cast<std::uint64_t>(num), exp);
}

}  // namespace dlacs
