#include "p2pdeploy/node_id.hpp"

#include <openssl/sha.h>

#include <algorithm>

#include "p2pdeploy/error.hpp"

namespace p2pdeploy {

std::array<std::uint8_t, NodeId::kDigits> NodeId::digits() const {
  std::array<std::uint8_t, kDigits> out{};
  for (int i = 0; i < kDigits; ++i) out[i] = static_cast<std::uint8_t>(digit(i));
  return out;
}

NodeId NodeId::from_digits(std::span<const std::uint8_t, kDigits> digits) {
  uint128 v = 0;
  for (auto d : digits) v = (v << kBitsPerDigit) | (d & 0xF);
  return NodeId(v);
}

std::string NodeId::hex() const {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out(kDigits, '0');
  for (int i = 0; i < kDigits; ++i) out[i] = kHex[digit(i)];
  return out;
}

NodeId NodeId::from_hex(std::string_view hex) {
  if (hex.size() != kDigits) throw Error(ErrorCode::InvalidArgument, "expected 32 hex digits, got '" + std::string(hex) + "'");
  uint128 v = 0;
  for (char c : hex) {
    int d;
    if (c >= '0' && c <= '9') d = c - '0';
    else if (c >= 'a' && c <= 'f') d = c - 'a' + 10;
    else throw Error(ErrorCode::InvalidArgument, "not a lowercase hex digit in '" + std::string(hex) + "'");
    v = (v << 4) | static_cast<uint128>(d);
  }
  return NodeId(v);
}

NodeId digest128(std::span<const std::uint8_t> bytes) {
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(bytes.data(), bytes.size(), md);
  uint128 v = 0;
  for (int i = 0; i < 16; ++i) v = (v << 8) | md[i];
  return NodeId(v);
}

NodeId digest128(std::string_view text) {
  return digest128(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

Key derive_key(std::string_view name) {
  if (name.empty()) throw Error(ErrorCode::InvalidName, "component name is empty");
  return digest128(name);
}

int shared_prefix_len(NodeId a, NodeId b) {
  uint128 diff = a.value() ^ b.value();
  if (diff == 0) return NodeId::kDigits;
  std::uint64_t hi = static_cast<std::uint64_t>(diff >> 64);
  int leading_zero_bits = hi != 0 ? __builtin_clzll(hi) : 64 + __builtin_clzll(static_cast<std::uint64_t>(diff));
  return leading_zero_bits / NodeId::kBitsPerDigit;
}

uint128 circular_distance(NodeId a, NodeId b) {
  uint128 d = a.value() - b.value();
  uint128 back = b.value() - a.value();
  return std::min(d, back);
}

bool closer_to(Key k, NodeId a, NodeId b) {
  uint128 da = circular_distance(a, k);
  uint128 db = circular_distance(b, k);
  return da != db ? da < db : a < b;
}

std::string to_decimal(uint128 v) {
  if (v == 0) return "0";
  std::string out;
  while (v != 0) {
    out.push_back(static_cast<char>('0' + static_cast<int>(v % 10)));
    v /= 10;
  }
  std::reverse(out.begin(), out.end());
  return out;
}

}  // namespace p2pdeploy
