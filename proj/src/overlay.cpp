#include "p2pdeploy/overlay.hpp"

#include <algorithm>
#include <set>

#include "p2pdeploy/store.hpp"

namespace p2pdeploy {

NodeId root_of(std::span<const NodeId> live_ids, Key k) {
  if (live_ids.empty()) throw Error(ErrorCode::NoNodes, "no live nodes to own key " + k.hex());
  NodeId best = live_ids.front();
  for (NodeId id : live_ids.subspan(1))
    if (closer_to(k, id, best)) best = id;
  return best;
}

NodeId root_of(const SimNetwork& net, Key k) {
  auto ids = net.live_ids();
  return root_of(ids, k);
}

std::vector<NodeId> route(SimNetwork& net, NodeId start, Key k, MessageKind kind, const HopVisitor& visit) {
  if (!net.is_live(start)) throw Error(ErrorCode::NoSuchNode, "route start " + start.hex() + " is not live");
  std::vector<NodeId> path{start};
  NodeId cur = start;
  while (true) {
    OverlayNode& node = net.node(cur);
    if (visit && visit(node)) return path;

    int attempts = 0;
    NodeId hop;
    while (true) {
      hop = next_hop(node.routing, k);
      if (hop == cur) return path;
      if (std::find(path.begin(), path.end(), hop) != path.end())
        throw RoutingError("routing loop at " + hop.hex() + " toward " + k.hex(), path);
      if (net.call(cur, hop, kind)) break;
      if (node.routing.forget(hop)) repair_leaf_set(net, cur);
      if (++attempts > net.config().retries)
        throw RoutingError("no live next hop from " + cur.hex() + " toward " + k.hex(), path);
    }
    path.push_back(hop);
    cur = hop;
  }
}

void repair_leaf_set(SimNetwork& net, NodeId id) {
  OverlayNode& node = net.node(id);
  for (int side = 0; side < 2; ++side) {
    std::set<NodeId> tried;
    for (int attempt = 0; attempt <= net.config().retries; ++attempt) {
      // Outermost member that lies on this side's half of the ring; borrowed
      // members from the far side would hand back the wrong neighbourhood.
      std::optional<NodeId> pick;
      for (NodeId m : node.routing.leaf_set.members()) {
        const uint128 cw = clockwise_offset(id, m), ccw = clockwise_offset(m, id);
        const bool natural = side == 0 ? ccw < cw : cw <= ccw;
        const uint128 off = side == 0 ? ccw : cw;
        if (natural && (!pick || off > (side == 0 ? clockwise_offset(*pick, id) : clockwise_offset(id, *pick))))
          pick = m;
      }
      if (!pick) {
        const auto& members = side == 0 ? node.routing.leaf_set.left() : node.routing.leaf_set.right();
        if (members.empty()) break;
        pick = members.back();
      }
      NodeId outer = *pick;
      if (!tried.insert(outer).second) break;
      if (!net.call(id, outer, MessageKind::Repair)) {
        node.routing.forget(outer);
        continue;
      }
      const OverlayNode& peer = net.node(outer);
      auto offered = peer.routing.leaf_set.members();
      net.call(outer, id, MessageKind::Repair, offered.size() * sizeof(NodeId));
      offered.push_back(outer);
      std::erase_if(offered, [&](NodeId o) { return o == id; });
      const auto before = node.routing.leaf_set.members();
      node.routing.learn_all(offered);
      // The peer's view may still list dead nodes; probe the newcomers.
      for (NodeId m : node.routing.leaf_set.members())
        if (std::find(before.begin(), before.end(), m) == before.end() && !net.call(id, m, MessageKind::Ping))
          node.routing.forget(m);
      break;
    }
  }
}

JoinReport join(SimNetwork& net, std::string name, NodeId new_id, std::optional<NodeId> bootstrap) {
  if (net.contains(new_id)) {
    const auto status = net.node(new_id).status;
    if (status == NodeStatus::Live || status == NodeStatus::Joining)
      throw Error(ErrorCode::DuplicateNode, "node " + new_id.hex() + " is already in the network");
    net.erase_node(new_id);  // a departed id rejoins as a fresh node
  }

  JoinReport report;
  report.id = new_id;
  const auto live = net.live_ids();
  if (live.empty() && !bootstrap) {
    net.add_node(std::move(name), new_id).status = NodeStatus::Live;
    report.join_path = {new_id};
    net.metrics().bump("joins");
    return report;
  }
  if (!bootstrap) throw Error(ErrorCode::InvalidArgument, "a bootstrap node is required to join a non-empty network");

  net.add_node(std::move(name), new_id);
  auto abort = [&](ErrorCode code, const std::string& why) {
    net.erase_node(new_id);
    throw Error(code, why);
  };
  if (!net.is_live(*bootstrap) || !net.call(new_id, *bootstrap, MessageKind::Join))
    abort(ErrorCode::BootstrapUnreachable, "bootstrap " + bootstrap->hex() + " did not answer");

  std::vector<NodeId> learned;
  try {
    report.join_path = route(net, *bootstrap, new_id, MessageKind::Join, [&](OverlayNode& hop) {
      learned.push_back(hop.id());
      auto rows = hop.routing.known();
      learned.insert(learned.end(), rows.begin(), rows.end());
      return false;
    });
  } catch (const RoutingError&) {
    net.erase_node(new_id);
    throw;
  }

  // The terminal node ships its leaf set (already folded into `learned`).
  const NodeId terminal = report.join_path.back();
  net.call(terminal, new_id, MessageKind::Repair, net.node(terminal).routing.leaf_set.size() * sizeof(NodeId));

  OverlayNode& fresh = net.node(new_id);
  std::erase(learned, new_id);
  fresh.routing.learn_all(learned);

  // Announce to everyone now known; they fold the newcomer into their state.
  std::vector<NodeId> silent;
  const auto contacts = fresh.routing.known();
  for (NodeId contact : contacts) {
    net.send(
        Message{new_id, contact, MessageKind::Join, 0, 0, 0},
        [&net, contact, new_id] { net.node(contact).routing.learn(new_id); },
        [&silent, contact] { silent.push_back(contact); });
  }
  net.run_until_quiescent(4 * net.config().timeout);
  for (NodeId dead : silent) fresh.routing.forget(dead);

  report.announced = contacts.size();
  report.known_after_join = fresh.routing.known().size();
  fresh.status = NodeStatus::Live;
  net.metrics().bump("joins");
  net.metrics().record_hops("join", static_cast<int>(report.join_path.size()) - 1);

  auto handoff = handoff_on_join(net, new_id);
  report.transferred = std::move(handoff.transferred);
  report.unresolved = std::move(handoff.unresolved);
  return report;
}

DepartureReport leave(SimNetwork& net, NodeId id, bool graceful) {
  if (!net.is_live(id)) throw Error(ErrorCode::NoSuchNode, "no live node " + id.hex());
  DepartureReport report;
  report.id = id;
  report.graceful = graceful;
  if (!graceful) {
    net.fail(id);
    return report;
  }

  OverlayNode& node = net.node(id);
  std::vector<Key> owned;
  for (const auto& [k, e] : node.store.entries())
    if (e.role == Role::Root) owned.push_back(k);

  for (Key k : owned) {
    const StoreEntry entry = *node.store.find(k);
    bool placed = false;
    for (int attempt = 0; attempt <= net.config().retries && !placed; ++attempt) {
      auto candidates = node.routing.leaf_set.members();
      if (candidates.empty()) break;
      NodeId heir = *std::min_element(candidates.begin(), candidates.end(),
                                      [&](NodeId a, NodeId b) { return closer_to(k, a, b); });
      if (net.call(id, heir, MessageKind::Transfer, entry.payload->size())) {
        detail::accept_root(net.node(heir), entry, net.now());
        report.handed_over.emplace_back(k, heir);
        placed = true;
      } else {
        node.routing.forget(heir);
      }
    }
    if (!placed) report.lost.push_back(k);
  }

  std::vector<NodeId> needs_repair;
  const auto contacts = node.routing.known();
  for (NodeId contact : contacts) {
    net.send(Message{id, contact, MessageKind::Leave, 0, 0, 0}, [&net, &needs_repair, contact, id] {
      if (net.node(contact).routing.forget(id)) needs_repair.push_back(contact);
    });
  }
  net.run_until_quiescent(4 * net.config().timeout);
  node.status = NodeStatus::Departed;
  report.notified = contacts.size();
  net.metrics().bump("leaves");

  std::sort(needs_repair.begin(), needs_repair.end());
  for (NodeId n : needs_repair)
    if (net.is_live(n)) repair_leaf_set(net, n);
  return report;
}

void stabilize(SimNetwork& net, NodeId id) {
  if (!net.is_live(id)) throw Error(ErrorCode::NoSuchNode, "no live node " + id.hex());
  OverlayNode& node = net.node(id);
  for (NodeId contact : node.routing.known())
    if (!net.call(id, contact, MessageKind::Ping)) node.routing.forget(contact);
  repair_leaf_set(net, id);
}

void stabilize_all(SimNetwork& net) {
  for (NodeId id : net.live_ids()) stabilize(net, id);
}

}  // namespace p2pdeploy
