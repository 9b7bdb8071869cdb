#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "p2pdeploy/node_id.hpp"

namespace p2pdeploy {

using SimTime = std::uint64_t;

// Archive bytes plus their 128-bit digest. The buffer is shared and immutable,
// so copies between simulated nodes are cheap.
class ComponentPayload {
 public:
  ComponentPayload() = default;
  explicit ComponentPayload(std::vector<std::uint8_t> bytes);

  const std::vector<std::uint8_t>& bytes() const;
  NodeId digest() const { return digest_; }
  std::size_t size() const { return bytes_ ? bytes_->size() : 0; }

  // Recomputes the digest over the bytes.
  bool consistent() const;

 private:
  std::shared_ptr<const std::vector<std::uint8_t>> bytes_;
  NodeId digest_;
};

enum class Role { Source, Root, Trail, Cache, Retained };

std::string_view to_string(Role role);

// SOURCE, ROOT and RETAINED entries never leave a store through eviction.
constexpr bool is_pinned(Role r) { return r == Role::Source || r == Role::Root || r == Role::Retained; }
constexpr bool carries_payload(Role r) { return r != Role::Trail; }

struct StoreEntry {
  Key key;
  std::string name;
  Role role = Role::Trail;
  std::optional<ComponentPayload> payload;
  // Digest announced at publish time; trail entries know it without the bytes.
  NodeId digest;
  // Nodes believed to hold the payload, root first, then source.
  std::vector<NodeId> locations;
  // Original publisher; lets a collapsed ROOT entry remember it was also the source.
  NodeId source;
  SimTime last_access = 0;
  std::uint64_t hits = 0;
  SimTime deposited_at = 0;

  bool well_formed() const;
};

struct StoreConfig {
  std::size_t cache_capacity = 64;
  SimTime ttl = 1000;
  bool cache_on_lookup = true;
};

// Per-node key-addressed storage with TTL/LRU eviction of unpinned entries.
class ComponentStore {
 public:
  explicit ComponentStore(StoreConfig config = {}) : config_(config) {}

  const StoreConfig& config() const { return config_; }
  void set_config(StoreConfig config) { config_ = config; }

  StoreEntry* find(Key k);
  const StoreEntry* find(Key k) const;
  const std::map<Key, StoreEntry>& entries() const { return entries_; }

  // Inserts or replaces. Triggers eviction when the unpinned count exceeds
  // cache_capacity; returns null if the new entry itself was dropped.
  StoreEntry* put(StoreEntry entry, SimTime now);
  bool erase(Key k);

  std::size_t unpinned_count() const;
  std::size_t stored_bytes() const;

  // Drops TRAIL/CACHE entries idle for longer than ttl, then least recently
  // accessed unpinned entries until within capacity.
  std::vector<Key> evict(SimTime now);

 private:
  StoreConfig config_;
  std::map<Key, StoreEntry> entries_;
};

}  // namespace p2pdeploy
