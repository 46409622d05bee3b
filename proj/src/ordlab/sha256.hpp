#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace ordlab {

// Minimal SHA-256, used for checkpoint content hashes. Byte-identical output
// on every platform is the whole point; speed is irrelevant at this scale.
class Sha256 {
 public:
  Sha256();
  void update(const uint8_t* data, size_t len);
  std::array<uint8_t, 32> finish();

  static std::array<uint8_t, 32> digest(const uint8_t* data, size_t len);
  static std::string hex(const std::array<uint8_t, 32>& d);

 private:
  void process_block(const uint8_t* block);
  uint32_t h_[8];
  uint8_t buf_[64];
  size_t buf_len_ = 0;
  uint64_t total_ = 0;
};

}  // namespace ordlab
