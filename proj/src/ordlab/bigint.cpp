#include "ordlab/bigint.hpp"

#include "ordlab/errors.hpp"

namespace ordlab {

namespace {
constexpr uint64_t kBase = 1000000000ull;
}

BigUint::BigUint(uint64_t v) {
  do {
    limbs_.push_back(static_cast<uint32_t>(v % kBase));
    v /= kBase;
  } while (v != 0);
}

void BigUint::trim() {
  while (limbs_.size() > 1 && limbs_.back() == 0) limbs_.pop_back();
}

BigUint& BigUint::mul_small(uint64_t m) {
  __uint128_t carry = 0;
  for (auto& limb : limbs_) {
    __uint128_t cur = static_cast<__uint128_t>(limb) * m + carry;
    limb = static_cast<uint32_t>(cur % kBase);
    carry = cur / kBase;
  }
  while (carry != 0) {
    limbs_.push_back(static_cast<uint32_t>(carry % kBase));
    carry /= kBase;
  }
  trim();
  return *this;
}

BigUint& BigUint::div_small(uint64_t d) {
  if (d == 0) fail(ErrorKind::invalid_argument, "BigUint: division by zero");
  uint64_t rem = 0;
  for (size_t i = limbs_.size(); i-- > 0;) {
    uint64_t cur = rem * kBase + limbs_[i];
    limbs_[i] = static_cast<uint32_t>(cur / d);
    rem = cur % d;
  }
  if (rem != 0) fail(ErrorKind::runtime, "BigUint: inexact small division");
  trim();
  return *this;
}

BigUint& BigUint::add(const BigUint& other) {
  const size_t n = std::max(limbs_.size(), other.limbs_.size());
  limbs_.resize(n, 0);
  uint64_t carry = 0;
  for (size_t i = 0; i < n; ++i) {
    uint64_t cur = carry + limbs_[i] + (i < other.limbs_.size() ? other.limbs_[i] : 0);
    limbs_[i] = static_cast<uint32_t>(cur % kBase);
    carry = cur / kBase;
  }
  if (carry != 0) limbs_.push_back(static_cast<uint32_t>(carry));
  return *this;
}

bool BigUint::fits_u64(uint64_t* out) const {
  __uint128_t acc = 0;
  for (size_t i = limbs_.size(); i-- > 0;) {
    acc = acc * kBase + limbs_[i];
    if (acc > UINT64_MAX) return false;
  }
  if (out) *out = static_cast<uint64_t>(acc);
  return true;
}

bool BigUint::operator<=(uint64_t v) const {
  uint64_t self;
  if (!fits_u64(&self)) return false;
  return self <= v;
}

std::string BigUint::str() const {
  std::string s = std::to_string(limbs_.back());
  for (size_t i = limbs_.size() - 1; i-- > 0;) {
    std::string part = std::to_string(limbs_[i]);
    s += std::string(9 - part.size(), '0') + part;
  }
  return s;
}

BigUint BigUint::factorial(uint64_t n) {
  BigUint r(1);
  for (uint64_t i = 2; i <= n; ++i) r.mul_small(i);
  return r;
}

BigUint BigUint::binomial(uint64_t n, uint64_t k) {
  if (k > n) fail(ErrorKind::invalid_argument, "binomial: k > n");
  if (k > n - k) k = n - k;
  BigUint r(1);
  for (uint64_t i = 1; i <= k; ++i) {
    r.mul_small(n - k + i);
    r.div_small(i);  // exact: r is C(n-k+i, i) after this step
  }
  return r;
}

}  // namespace ordlab
