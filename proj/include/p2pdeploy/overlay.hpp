#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "p2pdeploy/error.hpp"
#include "p2pdeploy/simnet.hpp"

namespace p2pdeploy {

// Brute-force owner of k: the id with the smallest circular distance, ties to
// the smaller raw value. Throws NoNodes on an empty set.
NodeId root_of(std::span<const NodeId> live_ids, Key k);
NodeId root_of(const SimNetwork& net, Key k);

// Raised when a route cannot make progress; carries the hops completed so far.
class RoutingError : public Error {
 public:
  RoutingError(const std::string& what, std::vector<NodeId> partial)
      : Error(ErrorCode::RoutingFailure, what), partial_path_(std::move(partial)) {}
  const std::vector<NodeId>& partial_path() const { return partial_path_; }

 private:
  std::vector<NodeId> partial_path_;
};

// Called at every node the message reaches, start included. Returning true
// stops the route there.
using HopVisitor = std::function<bool(OverlayNode&)>;

// Forwards a message hop by hop from start until a node's next hop is itself
// (or the visitor stops it). A hop that times out is dropped from the
// forwarding node's state and the hop is retried, up to config().retries times.
std::vector<NodeId> route(SimNetwork& net, NodeId start, Key k,
                          MessageKind kind = MessageKind::RouteStep, const HopVisitor& visit = {});

struct JoinReport {
  NodeId id;
  std::vector<NodeId> join_path;
  std::size_t known_after_join = 0;
  std::size_t announced = 0;
  std::vector<Key> transferred;
  std::vector<Key> unresolved;
};

// Pastry join: a JOIN message routed from bootstrap toward new_id collects
// routing rows from every node on the path and the leaf set of the terminal
// node; the newcomer then announces itself to everyone it learned about and
// receives the ROOT entries it now owns. bootstrap may be empty only when no
// live node exists.
JoinReport join(SimNetwork& net, std::string name, NodeId new_id, std::optional<NodeId> bootstrap);

struct DepartureReport {
  NodeId id;
  bool graceful = false;
  std::vector<std::pair<Key, NodeId>> handed_over;  // key, new root
  std::vector<Key> lost;
  std::size_t notified = 0;
};

DepartureReport leave(SimNetwork& net, NodeId id, bool graceful);

// Probes every contact of the node, drops the unresponsive ones and refills the
// leaf set from the outermost live leaves.
void stabilize(SimNetwork& net, NodeId id);
void stabilize_all(SimNetwork& net);

// Refills missing leaf-set sides by asking the outermost live leaf on each side.
void repair_leaf_set(SimNetwork& net, NodeId id);

}  // namespace p2pdeploy
