#include "p2pdeploy/component_store.hpp"

#include <algorithm>
#include <stdexcept>

namespace p2pdeploy {

namespace {
const std::vector<std::uint8_t> kEmpty;
}

ComponentPayload::ComponentPayload(std::vector<std::uint8_t> bytes)
    : bytes_(std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes))),
      digest_(digest128(*bytes_)) {}

const std::vector<std::uint8_t>& ComponentPayload::bytes() const { return bytes_ ? *bytes_ : kEmpty; }

bool ComponentPayload::consistent() const { return digest128(bytes()) == digest_; }

std::string_view to_string(Role role) {
  switch (role) {
    case Role::Source: return "SOURCE";
    case Role::Root: return "ROOT";
    case Role::Trail: return "TRAIL";
    case Role::Cache: return "CACHE";
    case Role::Retained: return "RETAINED";
  }
  return "?";
}

bool StoreEntry::well_formed() const {
  if (carries_payload(role)) return payload.has_value();
  return !payload.has_value() && !locations.empty();
}

StoreEntry* ComponentStore::find(Key k) {
  auto it = entries_.find(k);
  return it == entries_.end() ? nullptr : &it->second;
}

const StoreEntry* ComponentStore::find(Key k) const {
  auto it = entries_.find(k);
  return it == entries_.end() ? nullptr : &it->second;
}

StoreEntry* ComponentStore::put(StoreEntry entry, SimTime now) {
  if (!entry.well_formed()) throw std::logic_error("malformed store entry for " + entry.name);
  Key k = entry.key;
  bool pinned = is_pinned(entry.role);
  entries_[k] = std::move(entry);
  if (!pinned && unpinned_count() > config_.cache_capacity) evict(now);
  return find(k);
}

bool ComponentStore::erase(Key k) { return entries_.erase(k) != 0; }

std::size_t ComponentStore::unpinned_count() const {
  return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(),
                                                [](const auto& kv) { return !is_pinned(kv.second.role); }));
}

std::size_t ComponentStore::stored_bytes() const {
  std::size_t total = 0;
  for (const auto& [k, e] : entries_)
    if (e.payload) total += e.payload->size();
  return total;
}

std::vector<Key> ComponentStore::evict(SimTime now) {
  std::vector<Key> evicted;
  auto drop = [&](std::map<Key, StoreEntry>::iterator it) {
    if (is_pinned(it->second.role)) throw std::logic_error("eviction reached pinned entry " + it->second.name);
    evicted.push_back(it->first);
    return entries_.erase(it);
  };

  for (auto it = entries_.begin(); it != entries_.end();) {
    const StoreEntry& e = it->second;
    if (!is_pinned(e.role) && now > e.last_access && now - e.last_access > config_.ttl)
      it = drop(it);
    else
      ++it;
  }

  std::size_t unpinned = unpinned_count();
  while (unpinned > config_.cache_capacity) {
    auto victim = entries_.end();
    for (auto it = entries_.begin(); it != entries_.end(); ++it) {
      if (is_pinned(it->second.role)) continue;
      if (victim == entries_.end() || it->second.last_access < victim->second.last_access) victim = it;
    }
    drop(victim);
    --unpinned;
  }
  return evicted;
}

}  // namespace p2pdeploy
