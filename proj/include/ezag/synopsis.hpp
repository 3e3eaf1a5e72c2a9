#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

namespace ezag {

// Payload mismatch (kind, register count, or hash seed disagree).
struct SynopsisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class SynopsisKind : uint8_t { Max = 1, Min = 2, CountSketch = 3 };

const char* to_string(SynopsisKind k);

// Order- and duplicate-insensitive aggregate state. MAX/MIN carry one scalar;
// CountSketch is a probabilistic distinct counter: m registers, each a 64-bit
// map of trailing-zero ranks seen by ids hashed into that register (stochastic
// averaging). Join is an idempotent, commutative, associative merge, so
// re-delivery and re-ordering cannot skew the result.
class OdiSynopsis {
 public:
  OdiSynopsis() = default;

  static OdiSynopsis make_max();
  static OdiSynopsis make_min();
  static OdiSynopsis make_count(int registers = 64, uint64_t hash_seed = 1);

  SynopsisKind kind() const { return kind_; }
  bool empty() const;

  // MAX/MIN scalar contribution; throws SynopsisError for CountSketch.
  void insert(double value);
  // CountSketch id contribution; throws SynopsisError for MAX/MIN.
  void insert_id(int64_t id);
  // Contribution of a node id under any kind (MAX/MIN treat the id as the value).
  void insert_node(int id);

  // In-place join with a same-shaped synopsis; throws SynopsisError otherwise.
  void absorb(const OdiSynopsis& other);

  // MAX/MIN scalar; throws SynopsisError when empty or for CountSketch.
  double value() const;

  // Distinct-count estimate; 0 when no id was ever inserted. CountSketch only.
  double estimate_count() const;

  int registers() const { return static_cast<int>(regs_.size()); }

  // Fixed-width big-endian wire form; deserialize(serialize(s)) == s.
  std::vector<uint8_t> serialize() const;
  static OdiSynopsis deserialize(const uint8_t* data, size_t len);
  static OdiSynopsis deserialize(const std::vector<uint8_t>& buf) {
    return deserialize(buf.data(), buf.size());
  }

  bool operator==(const OdiSynopsis& other) const = default;

 private:
  SynopsisKind kind_ = SynopsisKind::Max;
  bool has_value_ = false;
  double value_ = 0.0;
  uint64_t hash_seed_ = 0;
  std::vector<uint64_t> regs_;
};

OdiSynopsis merged(OdiSynopsis a, const OdiSynopsis& b);

}  // namespace ezag
