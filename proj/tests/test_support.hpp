#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <random>
#include <string>
#include <vector>

#include "p2pdeploy/overlay.hpp"
#include "p2pdeploy/repo.hpp"
#include "p2pdeploy/store.hpp"

namespace p2pdeploy::testkit {

// Oracles below deliberately avoid the library's distance/ordering helpers.

inline uint128 oracle_distance(NodeId a, NodeId b) {
  uint128 x = a.value(), y = b.value();
  uint128 d = x > y ? x - y : y - x;
  uint128 wrap = (~d) + 1;  // 2^128 - d
  return d == 0 ? 0 : (d < wrap ? d : wrap);
}

inline NodeId oracle_root(const std::vector<NodeId>& ids, Key k) {
  NodeId best = ids.at(0);
  uint128 best_d = oracle_distance(best, k);
  for (NodeId id : ids) {
    uint128 d = oracle_distance(id, k);
    if (d < best_d || (d == best_d && id.value() < best.value())) {
      best = id;
      best_d = d;
    }
  }
  return best;
}

inline int oracle_prefix(NodeId a, NodeId b) {
  auto da = a.hex();
  auto db = b.hex();
  int n = 0;
  while (n < 32 && da[n] == db[n]) ++n;
  return n;
}

inline NodeId random_id(std::mt19937_64& gen) { return NodeId::from_parts(gen(), gen()); }

inline NetConfig default_config(bool cache = true) {
  NetConfig cfg;
  cfg.store.cache_on_lookup = cache;
  return cfg;
}

// Sequential joins, each through a uniformly chosen live bootstrap.
inline std::vector<NodeId> build_network(SimNetwork& net, std::size_t n, std::mt19937_64& gen, bool random_ids = true,
                                         const std::string& prefix = "n") {
  std::vector<NodeId> ids;
  for (std::size_t i = 0; i < n; ++i) {
    std::string name = prefix + std::to_string(net.nodes().size());
    NodeId id = random_ids ? random_id(gen) : derive_key(name);
    auto live = net.live_ids();
    std::optional<NodeId> bootstrap;
    if (!live.empty()) bootstrap = live[gen() % live.size()];
    join(net, name, id, bootstrap);
    ids.push_back(id);
  }
  return ids;
}

inline ComponentPayload payload_for(const std::string& name, std::size_t size = 256) {
  std::mt19937_64 gen(std::hash<std::string>{}(name));
  std::vector<std::uint8_t> bytes(size);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(gen());
  return ComponentPayload(std::move(bytes));
}

// Validates an install list without knowing how it was built: the requested
// bundle is present, nothing repeats, and every import of every element is
// exported by the base set, an earlier element, the element itself, or a
// member of its cycle group. Returns an empty string when the list is sound.
inline std::string check_install_order(const RepositoryIndex& index, const std::string& name,
                                       const std::vector<ResolvedBundle>& order, const std::set<std::string>& base) {
  std::set<std::string> seen;
  std::map<int, std::set<std::string>> groups;
  for (const auto& r : order) {
    const ComponentDescriptor* d = index.find(r.name);
    if (d == nullptr) return r.name + " not in index";
    if (r.cycle_group >= 0) groups[r.cycle_group].insert(d->exports.begin(), d->exports.end());
  }
  std::set<std::string> available = base;
  bool requested = false;
  for (const auto& r : order) {
    if (!seen.insert(r.name).second) return r.name + " listed twice";
    const ComponentDescriptor* d = index.find(r.name);
    requested |= r.name == name;
    for (const auto& pkg : d->imports) {
      bool ok = available.count(pkg) || (r.cycle_group >= 0 && groups[r.cycle_group].count(pkg)) ||
                std::count(d->exports.begin(), d->exports.end(), pkg);
      if (!ok) return r.name + " imports " + pkg + " before any provider";
    }
    available.insert(d->exports.begin(), d->exports.end());
  }
  if (!requested) return name + " missing from its own install list";
  return {};
}

// Up to 8 bundles b<i>, each exporting p<i> (sometimes one more). Edges only
// point to lower indices unless allow_cycles.
inline RepositoryIndex random_graph(std::mt19937_64& gen, bool allow_cycles, std::set<std::string>& base) {
  RepositoryIndex index;
  const int n = 1 + static_cast<int>(gen() % 8);
  base.clear();
  if (gen() % 3 == 0) base.insert("platform");
  for (int i = 0; i < n; ++i) {
    ComponentDescriptor d;
    d.name = "b" + std::to_string(i);
    d.version = std::to_string(1 + gen() % 3) + ".0";
    d.exports.push_back("p" + std::to_string(i));
    if (gen() % 4 == 0) d.exports.push_back("p" + std::to_string(gen() % n));
    for (int j = 0; j < n; ++j) {
      bool edge = allow_cycles ? (j != i && gen() % 3 == 0) : (j < i && gen() % 2 == 0);
      if (edge) d.imports.push_back("p" + std::to_string(j));
    }
    if (!base.empty() && gen() % 2 == 0) d.imports.push_back("platform");
    index.upsert(std::move(d));
  }
  return index;
}

inline std::string random_bundle_name(std::mt19937_64& gen) {
  static const std::string alphabet = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789._-:%~";
  std::string s(1 + gen() % 24, ' ');
  for (auto& c : s) c = alphabet[gen() % alphabet.size()];
  return s;
}

}  // namespace p2pdeploy::testkit
