#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ordlab {

// Unsigned big integer, base 1e9 limbs. Covers the ordering-count and
// domain-size combinatorics, which overflow u64 quickly.
class BigUint {
 public:
  BigUint() : limbs_{0} {}
  explicit BigUint(uint64_t v);

  BigUint& mul_small(uint64_t m);
  BigUint& div_small(uint64_t d);  // exact division expected by callers
  BigUint& add(const BigUint& other);

  bool fits_u64(uint64_t* out) const;
  bool operator<=(uint64_t v) const;
  bool operator==(const BigUint& other) const { return limbs_ == other.limbs_; }

  std::string str() const;

  static BigUint factorial(uint64_t n);
  static BigUint binomial(uint64_t n, uint64_t k);

 private:
  void trim();
  std::vector<uint32_t> limbs_;  // little-endian, base 1e9
};

}  // namespace ordlab
