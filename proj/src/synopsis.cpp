#include "ezag/synopsis.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "ezag/rng.hpp"

namespace ezag {

namespace {

// Probabilistic-counting correction constant (expected bias of the lowest
// unset rank across registers).
constexpr double kPcCorrection = 0.77351;

void put_u16(std::vector<uint8_t>& out, uint16_t v) {
  out.push_back(static_cast<uint8_t>(v >> 8));
  out.push_back(static_cast<uint8_t>(v));
}

void put_u64(std::vector<uint8_t>& out, uint64_t v) {
  for (int s = 56; s >= 0; s -= 8) out.push_back(static_cast<uint8_t>(v >> s));
}

uint16_t get_u16(const uint8_t* p) {
  return static_cast<uint16_t>((static_cast<uint16_t>(p[0]) << 8) | p[1]);
}

uint64_t get_u64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

}  // namespace

const char* to_string(SynopsisKind k) {
  switch (k) {
    case SynopsisKind::Max: return "max";
    case SynopsisKind::Min: return "min";
    case SynopsisKind::CountSketch: return "count";
  }
  return "?";
}

OdiSynopsis OdiSynopsis::make_max() {
  OdiSynopsis s;
  s.kind_ = SynopsisKind::Max;
  return s;
}

OdiSynopsis OdiSynopsis::make_min() {
  OdiSynopsis s;
  s.kind_ = SynopsisKind::Min;
  return s;
}

OdiSynopsis OdiSynopsis::make_count(int registers, uint64_t hash_seed) {
  if (registers < 1 || registers > 4096)
    throw SynopsisError("CountSketch: register count must be in [1, 4096]");
  OdiSynopsis s;
  s.kind_ = SynopsisKind::CountSketch;
  s.hash_seed_ = hash_seed;
  s.regs_.assign(static_cast<size_t>(registers), 0);
  return s;
}

bool OdiSynopsis::empty() const {
  if (kind_ != SynopsisKind::CountSketch) return !has_value_;
  for (uint64_t r : regs_)
    if (r) return false;
  return true;
}

void OdiSynopsis::insert(double value) {
  switch (kind_) {
    case SynopsisKind::Max:
      if (!has_value_ || value > value_) value_ = value;
      has_value_ = true;
      return;
    case SynopsisKind::Min:
      if (!has_value_ || value < value_) value_ = value;
      has_value_ = true;
      return;
    case SynopsisKind::CountSketch:
      throw SynopsisError("insert(double) is not defined for a count sketch");
  }
}

void OdiSynopsis::insert_id(int64_t id) {
  if (kind_ != SynopsisKind::CountSketch)
    throw SynopsisError("insert_id is only defined for a count sketch");
  const uint64_t h = splitmix64(static_cast<uint64_t>(id) ^ splitmix64(hash_seed_));
  const size_t reg = static_cast<size_t>(h % regs_.size());
  // Rank = trailing zeros of the remaining bits; geometric with p = 1/2.
  const uint64_t rest = h / regs_.size();
  const int rank = std::min(63, std::countr_zero(rest | (uint64_t{1} << 63)));
  regs_[reg] |= uint64_t{1} << rank;
}

void OdiSynopsis::insert_node(int id) {
  if (kind_ == SynopsisKind::CountSketch)
    insert_id(id);
  else
    insert(static_cast<double>(id));
}

void OdiSynopsis::absorb(const OdiSynopsis& other) {
  if (kind_ != other.kind_)
    throw SynopsisError("absorb: synopsis kinds differ");
  if (kind_ == SynopsisKind::CountSketch) {
    if (regs_.size() != other.regs_.size() || hash_seed_ != other.hash_seed_)
      throw SynopsisError("absorb: count sketch shapes differ");
    for (size_t i = 0; i < regs_.size(); ++i) regs_[i] |= other.regs_[i];
    return;
  }
  if (other.has_value_) insert(other.value_);
}

double OdiSynopsis::value() const {
  if (kind_ == SynopsisKind::CountSketch)
    throw SynopsisError("value: count sketch has no scalar value");
  if (!has_value_) throw SynopsisError("value: synopsis is empty");
  return value_;
}

double OdiSynopsis::estimate_count() const {
  if (kind_ != SynopsisKind::CountSketch)
    throw SynopsisError("estimate_count is only defined for a count sketch");
  if (empty()) return 0.0;
  // Mean lowest-unset rank over registers, then the PCSA estimator
  // m * 2^mean / correction.
  double rank_sum = 0.0;
  for (uint64_t r : regs_) rank_sum += static_cast<double>(std::countr_one(r));
  const double m = static_cast<double>(regs_.size());
  return m * std::exp2(rank_sum / m) / kPcCorrection;
}

std::vector<uint8_t> OdiSynopsis::serialize() const {
  std::vector<uint8_t> out;
  out.push_back(static_cast<uint8_t>(kind_));
  if (kind_ != SynopsisKind::CountSketch) {
    out.push_back(has_value_ ? 1 : 0);
    uint64_t bits = 0;
    static_assert(sizeof(bits) == sizeof(value_));
    std::memcpy(&bits, &value_, sizeof(bits));
    put_u64(out, bits);
    return out;
  }
  put_u16(out, static_cast<uint16_t>(regs_.size()));
  put_u64(out, hash_seed_);
  for (uint64_t r : regs_) put_u64(out, r);
  return out;
}

OdiSynopsis OdiSynopsis::deserialize(const uint8_t* data, size_t len) {
  if (len < 1) throw SynopsisError("deserialize: empty buffer");
  const auto kind = static_cast<SynopsisKind>(data[0]);
  if (kind == SynopsisKind::Max || kind == SynopsisKind::Min) {
    if (len != 10) throw SynopsisError("deserialize: bad scalar synopsis length");
    OdiSynopsis s;
    s.kind_ = kind;
    s.has_value_ = data[1] != 0;
    const uint64_t bits = get_u64(data + 2);
    std::memcpy(&s.value_, &bits, sizeof(s.value_));
    if (!s.has_value_) s.value_ = 0.0;
    return s;
  }
  if (kind == SynopsisKind::CountSketch) {
    if (len < 11) throw SynopsisError("deserialize: truncated count sketch");
    const uint16_t m = get_u16(data + 1);
    if (m < 1 || len != 11u + 8u * m)
      throw SynopsisError("deserialize: bad count sketch length");
    OdiSynopsis s;
    s.kind_ = kind;
    s.hash_seed_ = get_u64(data + 3);
    s.regs_.resize(m);
    for (uint16_t i = 0; i < m; ++i) s.regs_[i] = get_u64(data + 11 + 8 * i);
    return s;
  }
  throw SynopsisError("deserialize: unknown synopsis kind byte");
}

OdiSynopsis merged(OdiSynopsis a, const OdiSynopsis& b) {
  a.absorb(b);
  return a;
}

}  // namespace ezag
