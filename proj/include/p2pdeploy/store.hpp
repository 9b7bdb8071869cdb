#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "p2pdeploy/overlay.hpp"

namespace p2pdeploy {

struct PublishTrail {
  Key key;
  NodeId source;
  NodeId root;
  std::vector<NodeId> path;  // source first, root last
};

// Routes the payload from source to the key's root. The root keeps a ROOT
// copy, the source a SOURCE copy, and every node strictly between them a TRAIL
// association pointing at {root, source}.
PublishTrail publish(SimNetwork& net, NodeId source, std::string_view name, const ComponentPayload& payload);

struct LookupResult {
  ComponentPayload payload;
  NodeId served_by;
  int hops = 0;
  std::vector<NodeId> path;  // client first, serving node last
};

// Follows next_hop from the client; the first node with an entry for the key
// answers. A TRAIL holder fetches the payload from root, then source; if both
// are gone the lookup keeps going toward the root. The payload is cached on
// the reverse path when cache_on_lookup is set.
LookupResult lookup(SimNetwork& net, NodeId client, std::string_view name);

struct RemovalReport {
  Key key;
  NodeId root;
  std::vector<NodeId> path;
};

// Deletes the requester's SOURCE copy and the root copy. Trail and cache
// entries are left to expire.
RemovalReport remove(SimNetwork& net, NodeId requester, std::string_view name);

std::vector<Key> evict(OverlayNode& node, SimTime now);
void evict_all(SimNetwork& net);

struct HandoffReport {
  std::vector<Key> transferred;
  std::vector<Key> unresolved;
};

// Run right after new_node joined: leaf-set neighbors hand over the ROOT
// entries it now owns and keep their copy as RETAINED.
HandoffReport handoff_on_join(SimNetwork& net, NodeId new_node);

// Live nodes holding a payload-bearing entry for the name.
std::size_t replica_count(const SimNetwork& net, std::string_view name);

// Live nodes holding ROOT for the key.
std::vector<NodeId> root_holders(const SimNetwork& net, Key k);

}  // namespace p2pdeploy

namespace p2pdeploy::detail {

// Makes `holder` the ROOT of from.key, keeping any existing source marker.
void accept_root(OverlayNode& holder, const StoreEntry& from, SimTime now);

}  // namespace p2pdeploy::detail
