#include "p2pdeploy/store.hpp"

#include <algorithm>

namespace p2pdeploy {

namespace detail {

void accept_root(OverlayNode& holder, const StoreEntry& from, SimTime now) {
  StoreEntry e = from;
  e.role = Role::Root;
  e.last_access = now;
  e.locations = {holder.id()};
  if (from.source != holder.id()) e.locations.push_back(from.source);
  if (const StoreEntry* existing = holder.store.find(from.key)) e.hits = existing->hits;
  holder.store.put(std::move(e), now);
}

}  // namespace detail

namespace {

void touch(StoreEntry& e, SimTime now) {
  e.last_access = now;
  ++e.hits;
}

std::vector<NodeId> locations_for(NodeId root, NodeId source) {
  if (root == source) return {root};
  return {root, source};
}

}  // namespace

PublishTrail publish(SimNetwork& net, NodeId source, std::string_view name, const ComponentPayload& payload) {
  const Key k = derive_key(name);
  if (!net.is_live(source)) throw Error(ErrorCode::NoSuchNode, "publisher " + source.hex() + " is not live");
  if (!payload.consistent()) throw Error(ErrorCode::IntegrityError, "payload digest does not match its bytes");

  auto conflicts = [&](const StoreEntry* e) { return e != nullptr && e->digest != payload.digest(); };
  if (conflicts(net.node(source).store.find(k)))
    throw Error(ErrorCode::VersionConflict, std::string(name) + " is already published with different content");

  PublishTrail trail{k, source, source, {}};
  try {
    trail.path = route(net, source, k, MessageKind::Publish);
  } catch (const RoutingError& e) {
    throw Error(ErrorCode::PublishFailed, e.what());
  }
  trail.root = trail.path.back();

  OverlayNode& root = net.node(trail.root);
  if (conflicts(root.store.find(k))) {
    net.call(trail.root, source, MessageKind::Ack);
    throw Error(ErrorCode::VersionConflict, std::string(name) + " is already published with different content");
  }

  const SimTime now = net.now();
  StoreEntry base;
  base.key = k;
  base.name = std::string(name);
  base.digest = payload.digest();
  base.source = source;
  base.locations = locations_for(trail.root, source);
  base.last_access = now;
  base.deposited_at = now;

  {
    StoreEntry e = base;
    e.role = Role::Root;
    e.payload = payload;
    if (const StoreEntry* old = root.store.find(k)) e.hits = old->hits;
    root.store.put(std::move(e), now);
  }

  // The acknowledgement walks back to the source and lays the trail.
  for (std::size_t i = trail.path.size() - 1; i-- > 0;) {
    if (!net.call(trail.path[i + 1], trail.path[i], MessageKind::Ack))
      throw Error(ErrorCode::PublishFailed, "acknowledgement lost at " + trail.path[i].hex());
    OverlayNode& hop = net.node(trail.path[i]);
    StoreEntry* existing = hop.store.find(k);
    if (i == 0) {
      StoreEntry e = base;
      e.role = Role::Source;
      e.payload = payload;
      if (existing) e.hits = existing->hits;
      hop.store.put(std::move(e), net.now());
    } else if (existing && existing->payload) {
      existing->locations = base.locations;
      existing->last_access = net.now();
    } else {
      StoreEntry e = base;
      e.role = Role::Trail;
      e.last_access = net.now();
      if (existing) e.hits = existing->hits;
      hop.store.put(std::move(e), net.now());
    }
  }

  net.metrics().bump("publishes");
  net.metrics().record_hops("publish", static_cast<int>(trail.path.size()) - 1);
  return trail;
}

LookupResult lookup(SimNetwork& net, NodeId client, std::string_view name) {
  const Key k = derive_key(name);
  if (!net.is_live(client)) throw Error(ErrorCode::NoSuchNode, "client " + client.hex() + " is not live");
  const bool cache = net.config().store.cache_on_lookup;

  std::optional<ComponentPayload> found;
  NodeId expected_digest;
  std::vector<NodeId> origin;
  bool saw_trail = false;

  auto visit = [&](OverlayNode& node) {
    StoreEntry* e = node.store.find(k);
    if (e == nullptr) return false;
    if (e->payload) {
      touch(*e, net.now());
      found = e->payload;
      expected_digest = e->digest;
      origin = e->locations;
      return true;
    }
    saw_trail = true;
    const auto locations = e->locations;
    for (NodeId loc : locations) {
      if (loc == node.id() || !net.call(node.id(), loc, MessageKind::Lookup)) continue;
      StoreEntry* held = net.node(loc).store.find(k);
      if (held == nullptr || !held->payload) {
        net.call(loc, node.id(), MessageKind::Ack);
        continue;
      }
      touch(*held, net.now());
      ComponentPayload fetched = *held->payload;
      const NodeId held_digest = held->digest;
      if (!net.call(loc, node.id(), MessageKind::Transfer, fetched.size())) continue;
      // The trail entry may have been dropped by eviction while we waited.
      e = node.store.find(k);
      found = fetched;
      expected_digest = held_digest;
      origin = locations;
      if (e != nullptr) {
        touch(*e, net.now());
        if (cache && !e->payload) {
          e->role = Role::Cache;
          e->payload = fetched;
        }
      }
      return true;
    }
    return false;
  };

  std::vector<NodeId> path;
  try {
    path = route(net, client, k, MessageKind::Lookup, visit);
  } catch (const RoutingError& e) {
    net.metrics().bump("lookup_failures");
    throw Error(ErrorCode::LookupFailure, e.what());
  }

  if (!found) {
    if (saw_trail) {
      net.metrics().bump("lookup_unavailable");
      throw Error(ErrorCode::Unavailable, std::string(name) + ": every known holder is unreachable");
    }
    net.metrics().bump("lookup_not_found");
    throw Error(ErrorCode::NotFound, std::string(name) + " is not published (root " + path.back().hex() + ")");
  }
  if (!found->consistent() || found->digest() != expected_digest)
    throw Error(ErrorCode::IntegrityError, std::string(name) + ": payload digest mismatch");

  LookupResult result{*found, path.back(), static_cast<int>(path.size()) - 1, path};

  // Reply travels back along the lookup path; intermediate hops cache it.
  for (std::size_t i = path.size() - 1; i-- > 0;) {
    if (!net.call(path[i + 1], path[i], MessageKind::Transfer, found->size())) {
      net.metrics().bump("lookup_failures");
      throw Error(ErrorCode::LookupFailure, "reply lost at " + path[i + 1].hex());
    }
    if (i == 0 || !cache) continue;
    OverlayNode& hop = net.node(path[i]);
    if (StoreEntry* e = hop.store.find(k)) {
      touch(*e, net.now());
      if (!e->payload) {
        e->role = Role::Cache;
        e->payload = found;
      }
      continue;
    }
    StoreEntry e;
    e.key = k;
    e.name = std::string(name);
    e.role = Role::Cache;
    e.payload = found;
    e.digest = expected_digest;
    e.locations = origin.empty() ? std::vector<NodeId>{result.served_by} : origin;
    e.source = origin.size() > 1 ? origin.back() : result.served_by;
    e.last_access = net.now();
    e.deposited_at = net.now();
    hop.store.put(std::move(e), net.now());
  }

  net.metrics().bump("lookups");
  net.metrics().record_hops("lookup", result.hops);
  return result;
}

RemovalReport remove(SimNetwork& net, NodeId requester, std::string_view name) {
  const Key k = derive_key(name);
  if (!net.is_live(requester)) throw Error(ErrorCode::NoSuchNode, "requester " + requester.hex() + " is not live");
  OverlayNode& req = net.node(requester);
  const StoreEntry* own = req.store.find(k);
  const bool owner = own != nullptr && (own->role == Role::Source || (own->role == Role::Root && own->source == requester));
  if (own != nullptr && !owner)
    throw Error(ErrorCode::NotOwner, req.name + " did not publish " + std::string(name));

  RemovalReport report{k, requester, {}};
  try {
    report.path = route(net, requester, k, MessageKind::Remove);
  } catch (const RoutingError& e) {
    throw Error(ErrorCode::LookupFailure, e.what());
  }
  report.root = report.path.back();
  OverlayNode& root = net.node(report.root);
  const bool root_has = root.store.find(k) != nullptr;
  if (report.root != requester) net.call(report.root, requester, MessageKind::Ack);
  if (!owner) {
    if (root_has) throw Error(ErrorCode::NotOwner, req.name + " did not publish " + std::string(name));
    throw Error(ErrorCode::NotFound, std::string(name) + " is not published");
  }
  root.store.erase(k);
  req.store.erase(k);
  net.metrics().bump("removals");
  return report;
}

std::vector<Key> evict(OverlayNode& node, SimTime now) { return node.store.evict(now); }

void evict_all(SimNetwork& net) {
  std::uint64_t total = 0;
  for (auto& [id, node] : net.nodes())
    if (node.live()) total += node.store.evict(net.now()).size();
  if (total != 0) net.metrics().bump("evictions", total);
}

HandoffReport handoff_on_join(SimNetwork& net, NodeId new_node) {
  HandoffReport report;
  OverlayNode& fresh = net.node(new_node);
  for (NodeId neighbor : fresh.routing.leaf_set.members()) {
    if (!net.call(new_node, neighbor, MessageKind::Repair)) {
      fresh.routing.forget(neighbor);
      continue;
    }
    OverlayNode& holder = net.node(neighbor);
    auto candidates = holder.routing.leaf_set.members();
    candidates.push_back(neighbor);
    candidates.push_back(new_node);

    std::vector<Key> moving;
    for (const auto& [k, e] : holder.store.entries())
      if (e.role == Role::Root && root_of(candidates, k) == new_node) moving.push_back(k);

    for (Key k : moving) {
      StoreEntry* e = holder.store.find(k);
      bool sent = false;
      for (int attempt = 0; attempt < 2 && !sent; ++attempt)
        sent = net.call(neighbor, new_node, MessageKind::Transfer, e->payload->size());
      if (!sent) {
        report.unresolved.push_back(k);
        continue;
      }
      detail::accept_root(fresh, *e, net.now());
      e->role = Role::Retained;
      report.transferred.push_back(k);
    }
  }
  std::sort(report.transferred.begin(), report.transferred.end());
  if (!report.transferred.empty()) net.metrics().bump("handoffs", report.transferred.size());
  return report;
}

std::size_t replica_count(const SimNetwork& net, std::string_view name) {
  const Key k = derive_key(name);
  std::size_t count = 0;
  for (const auto& [id, node] : net.nodes()) {
    if (!node.live()) continue;
    const StoreEntry* e = node.store.find(k);
    if (e != nullptr && e->payload) ++count;
  }
  return count;
}

std::vector<NodeId> root_holders(const SimNetwork& net, Key k) {
  std::vector<NodeId> out;
  for (const auto& [id, node] : net.nodes()) {
    if (!node.live()) continue;
    const StoreEntry* e = node.store.find(k);
    if (e != nullptr && e->role == Role::Root) out.push_back(id);
  }
  return out;
}

}  // namespace p2pdeploy
