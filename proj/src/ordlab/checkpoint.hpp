#pragma once

#include <bit>
#include <cstring>
#include <fstream>

#include "ordlab/nn.hpp"
#include "ordlab/optimizer.hpp"
#include "ordlab/rng.hpp"
#include "ordlab/sha256.hpp"

namespace ordlab {

// Versioned binary container: magic "ORDLAB01", metadata block, little-endian
// 64-bit-length-prefixed tensor blobs, then a 32-byte content hash of all
// preceding bytes. restore(snapshot(x)) is bitwise identity.
inline constexpr char kCheckpointMagic[8] = {'O', 'R', 'D', 'L', 'A', 'B', '0', '1'};

namespace detail {

inline void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

inline uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

template <class S>
void put_scalar(std::vector<uint8_t>& out, S v) {
  if constexpr (sizeof(S) == 4) {
    uint32_t bits = std::bit_cast<uint32_t>(v);
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(bits >> (8 * i)));
  } else {
    uint64_t bits = std::bit_cast<uint64_t>(v);
    put_u64(out, bits);
  }
}

template <class S>
S get_scalar(const uint8_t* p) {
  if constexpr (sizeof(S) == 4) {
    uint32_t bits = 0;
    for (int i = 0; i < 4; ++i) bits |= static_cast<uint32_t>(p[i]) << (8 * i);
    return std::bit_cast<S>(bits);
  } else {
    return std::bit_cast<S>(get_u64(p));
  }
}

template <class S>
void put_tensor_blob(std::vector<uint8_t>& out, const TensorT<S>& t) {
  std::vector<uint8_t> blob;
  put_u64(blob, t.rank());
  for (size_t i = 0; i < t.rank(); ++i) put_u64(blob, t.extent(i));
  for (S v : t.values()) put_scalar<S>(blob, v);
  put_u64(out, blob.size());
  out.insert(out.end(), blob.begin(), blob.end());
}

template <class S>
TensorT<S> get_tensor_blob(const uint8_t* data, size_t len, size_t* pos, size_t total) {
  if (*pos + 8 > total) fail(ErrorKind::integrity, "checkpoint truncated in blob length");
  const uint64_t blob_len = get_u64(data + *pos);
  *pos += 8;
  if (*pos + blob_len > total) fail(ErrorKind::integrity, "checkpoint truncated in tensor blob");
  const uint8_t* b = data + *pos;
  size_t off = 0;
  const uint64_t ndim = get_u64(b + off);
  off += 8;
  std::vector<size_t> shape;
  size_t count = 1;
  for (uint64_t i = 0; i < ndim; ++i) {
    const uint64_t e = get_u64(b + off);
    off += 8;
    shape.push_back(static_cast<size_t>(e));
    count *= static_cast<size_t>(e);
  }
  if (off + count * sizeof(S) != blob_len) fail(ErrorKind::integrity, "checkpoint blob size mismatch");
  std::vector<S> values(count);
  for (size_t i = 0; i < count; ++i) values[i] = get_scalar<S>(b + off + i * sizeof(S));
  *pos += blob_len;
  (void)len;
  return TensorT<S>::from(std::move(shape), std::move(values));
}

}  // namespace detail

template <class S>
struct CheckpointT {
  std::vector<TensorT<S>> params;
  std::vector<TensorT<S>> velocity;
  uint64_t rng_state = 0;
  int64_t step = 0;
  int64_t epoch = 0;

  std::vector<uint8_t> serialize() const {
    std::vector<uint8_t> out;
    out.insert(out.end(), kCheckpointMagic, kCheckpointMagic + 8);
    out.push_back(static_cast<uint8_t>(sizeof(S)));
    detail::put_u64(out, static_cast<uint64_t>(step));
    detail::put_u64(out, static_cast<uint64_t>(epoch));
    detail::put_u64(out, rng_state);
    detail::put_u64(out, params.size());
    detail::put_u64(out, velocity.size());
    for (const auto& t : params) detail::put_tensor_blob(out, t);
    for (const auto& t : velocity) detail::put_tensor_blob(out, t);
    auto hash = Sha256::digest(out.data(), out.size());
    out.insert(out.end(), hash.begin(), hash.end());
    return out;
  }

  static CheckpointT deserialize(const std::vector<uint8_t>& bytes) {
    constexpr size_t header = 8 + 1 + 5 * 8;
    if (bytes.size() < header + 32) fail(ErrorKind::integrity, "checkpoint truncated: too short");
    if (std::memcmp(bytes.data(), kCheckpointMagic, 8) != 0)
      fail(ErrorKind::format, "checkpoint: bad magic, not an ORDLAB01 container");
    const size_t body = bytes.size() - 32;
    auto hash = Sha256::digest(bytes.data(), body);
    if (std::memcmp(hash.data(), bytes.data() + body, 32) != 0)
      fail(ErrorKind::integrity, "checkpoint integrity failure: content hash mismatch (stored " +
                                     Sha256::hex(to_array(bytes.data() + body)) + ", computed " +
                                     Sha256::hex(hash) + ")");
    if (bytes[8] != sizeof(S)) fail(ErrorKind::format, "checkpoint dtype does not match this build mode");
    CheckpointT cp;
    size_t pos = 9;
    cp.step = static_cast<int64_t>(detail::get_u64(bytes.data() + pos));
    pos += 8;
    cp.epoch = static_cast<int64_t>(detail::get_u64(bytes.data() + pos));
    pos += 8;
    cp.rng_state = detail::get_u64(bytes.data() + pos);
    pos += 8;
    const uint64_t n_params = detail::get_u64(bytes.data() + pos);
    pos += 8;
    const uint64_t n_vel = detail::get_u64(bytes.data() + pos);
    pos += 8;
    for (uint64_t i = 0; i < n_params; ++i)
      cp.params.push_back(detail::get_tensor_blob<S>(bytes.data(), bytes.size(), &pos, body));
    for (uint64_t i = 0; i < n_vel; ++i)
      cp.velocity.push_back(detail::get_tensor_blob<S>(bytes.data(), bytes.size(), &pos, body));
    if (pos != body) fail(ErrorKind::integrity, "checkpoint has trailing bytes before hash");
    return cp;
  }

  std::string content_hash_hex() const {
    auto bytes = serialize();
    return Sha256::hex(to_array(bytes.data() + bytes.size() - 32));
  }

  void save_file(const std::string& path) const {
    auto bytes = serialize();
    std::ofstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::runtime, "cannot open checkpoint file for writing: " + path);
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) fail(ErrorKind::runtime, "short write on checkpoint file: " + path);
  }

  static CheckpointT load_file(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) fail(ErrorKind::runtime, "cannot open checkpoint file: " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return deserialize(bytes);
  }

 private:
  static std::array<uint8_t, 32> to_array(const uint8_t* p) {
    std::array<uint8_t, 32> a;
    std::memcpy(a.data(), p, 32);
    return a;
  }
};

using Checkpoint = CheckpointT<float>;

template <class S>
CheckpointT<S> snapshot(ModelT<S>& model, const SgdOptimizer<S>& opt, const Rng& rng, int64_t step,
                        int64_t epoch) {
  CheckpointT<S> cp;
  for (auto* p : model.params()) cp.params.push_back(*p);
  cp.velocity = opt.velocity;
  cp.rng_state = rng.state();
  cp.step = step;
  cp.epoch = epoch;
  return cp;
}

template <class S>
void restore(const CheckpointT<S>& cp, ModelT<S>& model, SgdOptimizer<S>& opt, Rng& rng, int64_t* step,
             int64_t* epoch) {
  auto params = model.params();
  if (params.size() != cp.params.size())
    fail(ErrorKind::invalid_argument, "restore: parameter count mismatch with target model");
  for (size_t i = 0; i < params.size(); ++i) {
    if (!params[i]->same_shape(cp.params[i]))
      fail(ErrorKind::invalid_argument, "restore: parameter shape mismatch at index " + std::to_string(i));
    *params[i] = cp.params[i];
  }
  if (opt.velocity.size() != cp.velocity.size())
    fail(ErrorKind::invalid_argument, "restore: velocity count mismatch");
  opt.velocity = cp.velocity;
  rng.set_state(cp.rng_state);
  if (step) *step = cp.step;
  if (epoch) *epoch = cp.epoch;
}

// Content hash over parameters + velocities only; the rollback-exactness probe.
template <class S>
std::string state_hash(ModelT<S>& model, const SgdOptimizer<S>& opt) {
  std::vector<uint8_t> buf;
  for (auto* p : model.params()) detail::put_tensor_blob(buf, *p);
  for (const auto& v : opt.velocity) detail::put_tensor_blob(buf, v);
  return Sha256::hex(Sha256::digest(buf.data(), buf.size()));
}

template <class S>
std::string state_hash(const CheckpointT<S>& cp) {
  std::vector<uint8_t> buf;
  for (const auto& p : cp.params) detail::put_tensor_blob(buf, p);
  for (const auto& v : cp.velocity) detail::put_tensor_blob(buf, v);
  return Sha256::hex(Sha256::digest(buf.data(), buf.size()));
}

}  // namespace ordlab
