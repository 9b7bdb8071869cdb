#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>

namespace p2pdeploy {

using uint128 = unsigned __int128;

// Identifier on the circular space [0, 2^128). Viewed as 32 hex digits, most
// significant first, for prefix routing.
class NodeId {
 public:
  static constexpr int kDigits = 32;
  static constexpr int kBitsPerDigit = 4;
  static constexpr int kRadix = 16;

  constexpr NodeId() = default;
  constexpr explicit NodeId(uint128 v) : value_(v) {}
  static constexpr NodeId from_parts(std::uint64_t hi, std::uint64_t lo) {
    return NodeId((static_cast<uint128>(hi) << 64) | lo);
  }

  constexpr uint128 value() const { return value_; }
  constexpr std::uint64_t high() const { return static_cast<std::uint64_t>(value_ >> 64); }
  constexpr std::uint64_t low() const { return static_cast<std::uint64_t>(value_); }

  // Digit i in [0, 32), 0 being the most significant.
  constexpr int digit(int i) const {
    return static_cast<int>((value_ >> ((kDigits - 1 - i) * kBitsPerDigit)) & 0xF);
  }
  std::array<std::uint8_t, kDigits> digits() const;
  static NodeId from_digits(std::span<const std::uint8_t, kDigits> digits);

  // 32 lowercase hex characters.
  std::string hex() const;
  static NodeId from_hex(std::string_view hex);

  friend constexpr auto operator<=>(const NodeId&, const NodeId&) = default;

 private:
  uint128 value_ = 0;
};

// Keys live in the same space as node ids.
using Key = NodeId;

// First 128 bits of SHA-1 over the bytes, big-endian.
NodeId digest128(std::span<const std::uint8_t> bytes);
NodeId digest128(std::string_view text);

// Key for a component name. Throws InvalidName on an empty name.
Key derive_key(std::string_view name);

// Number of leading hex digits shared by a and b; 32 iff a == b.
int shared_prefix_len(NodeId a, NodeId b);

// min(|a - b|, 2^128 - |a - b|).
uint128 circular_distance(NodeId a, NodeId b);

// Clockwise offset from `from` to `to`, i.e. (to - from) mod 2^128.
constexpr uint128 clockwise_offset(NodeId from, NodeId to) { return to.value() - from.value(); }

// True when `a` is strictly closer to k than `b`, ties going to the smaller id.
bool closer_to(Key k, NodeId a, NodeId b);

std::string to_decimal(uint128 v);

}  // namespace p2pdeploy

template <>
struct std::hash<p2pdeploy::NodeId> {
  std::size_t operator()(const p2pdeploy::NodeId& id) const noexcept {
    return std::hash<std::uint64_t>{}(id.high() ^ (id.low() * 0x9e3779b97f4a7c15ULL));
  }
};
