#include "p2pdeploy/simnet.hpp"

#include <stdexcept>

#include "p2pdeploy/error.hpp"

namespace p2pdeploy {

std::string_view to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::Joining: return "JOINING";
    case NodeStatus::Live: return "LIVE";
    case NodeStatus::Departed: return "DEPARTED";
    case NodeStatus::Failed: return "FAILED";
  }
  return "?";
}

std::string_view to_string(MessageKind k) {
  switch (k) {
    case MessageKind::Join: return "JOIN";
    case MessageKind::RouteStep: return "ROUTE_STEP";
    case MessageKind::Lookup: return "LOOKUP";
    case MessageKind::Publish: return "PUBLISH";
    case MessageKind::Transfer: return "TRANSFER";
    case MessageKind::Repair: return "REPAIR";
    case MessageKind::Ack: return "ACK";
    case MessageKind::Leave: return "LEAVE";
    case MessageKind::Remove: return "REMOVE";
    case MessageKind::Ping: return "PING";
  }
  return "?";
}

SimNetwork::SimNetwork(std::uint64_t seed, NetConfig config)
    : seed_(seed), config_(config), rng_(seed), next_maintenance_(config.maintenance_interval) {
  if (config_.latency_max <= config_.latency_min) throw Error(ErrorCode::InvalidArgument, "empty latency range");
  if (config_.timeout < config_.latency_max) throw Error(ErrorCode::InvalidArgument, "timeout shorter than max latency");
  if (config_.maintenance_interval == 0) throw Error(ErrorCode::InvalidArgument, "maintenance interval must be positive");
  if (config_.store.ttl == 0) throw Error(ErrorCode::InvalidArgument, "ttl must be positive");
}

OverlayNode& SimNetwork::add_node(std::string name, NodeId id) {
  auto [it, inserted] = nodes_.try_emplace(id, std::move(name), id, config_.store);
  if (!inserted) throw Error(ErrorCode::DuplicateNode, "node " + id.hex() + " already registered");
  return it->second;
}

void SimNetwork::erase_node(NodeId id) { nodes_.erase(id); }

bool SimNetwork::is_live(NodeId id) const {
  auto it = nodes_.find(id);
  return it != nodes_.end() && it->second.live();
}

OverlayNode& SimNetwork::node(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::NoSuchNode, "no node " + id.hex());
  return it->second;
}

const OverlayNode& SimNetwork::node(NodeId id) const {
  auto it = nodes_.find(id);
  if (it == nodes_.end()) throw Error(ErrorCode::NoSuchNode, "no node " + id.hex());
  return it->second;
}

std::vector<NodeId> SimNetwork::live_ids() const {
  std::vector<NodeId> out;
  for (const auto& [id, n] : nodes_)
    if (n.live()) out.push_back(id);
  return out;
}

OverlayNode* SimNetwork::find_by_name(std::string_view name) {
  for (auto& [id, n] : nodes_)
    if (n.name == name) return &n;
  return nullptr;
}

namespace {
bool reachable(const std::map<NodeId, OverlayNode>& nodes, NodeId id) {
  auto it = nodes.find(id);
  return it != nodes.end() && (it->second.status == NodeStatus::Live || it->second.status == NodeStatus::Joining);
}
}  // namespace

std::uint64_t SimNetwork::uniform(std::uint64_t bound) { return rng_() % bound; }

double SimNetwork::uniform_real() { return static_cast<double>(rng_() >> 11) * 0x1p-53; }

void SimNetwork::push(Event e) {
  e.seq = seq_++;
  queue_.push(std::move(e));
}

std::uint64_t SimNetwork::send(Message msg, Handler on_deliver, Handler on_timeout) {
  if (!reachable(nodes_, msg.from)) throw std::logic_error("send from a node that is not live: " + msg.from.hex());
  if (msg.correlation == 0) msg.correlation = ++correlation_;
  if (msg.deadline == 0) msg.deadline = clock_ + config_.timeout;
  ++metrics_.sent[static_cast<std::size_t>(msg.kind)];

  Event e{0, 0, false, msg, std::move(on_deliver), std::move(on_timeout)};
  if (reachable(nodes_, msg.to)) {
    e.time = clock_ + config_.latency_min + uniform(config_.latency_max - config_.latency_min);
  } else {
    e.time = msg.deadline;
    e.timeout = true;
  }
  std::uint64_t id = msg.correlation;
  push(std::move(e));
  return id;
}

void SimNetwork::move_clock(SimTime to) {
  if (to < clock_) throw std::logic_error("clock moving backwards");
  while (next_maintenance_ <= to) {
    clock_ = next_maintenance_;
    next_maintenance_ += config_.maintenance_interval;
    if (config_.periodic_eviction) {
      std::uint64_t evicted = 0;
      for (auto& [id, node] : nodes_)
        if (node.live()) evicted += node.store.evict(clock_).size();
      if (evicted != 0) metrics_.bump("evictions", evicted);
    }
    for (auto& hook : maintenance_) hook(*this);
  }
  clock_ = to;
}

void SimNetwork::step() {
  Event e = queue_.top();
  queue_.pop();
  move_clock(e.time);
  if (!e.timeout && !reachable(nodes_, e.msg.to)) {
    // Destination died while the message was in flight.
    e.timeout = true;
    e.time = std::max(e.msg.deadline, clock_);
    push(std::move(e));
    return;
  }
  auto kind = static_cast<std::size_t>(e.msg.kind);
  if (e.timeout) {
    ++metrics_.timeouts[kind];
    if (e.on_timeout) e.on_timeout();
  } else {
    ++metrics_.delivered[kind];
    if (e.on_deliver) e.on_deliver();
  }
}

bool SimNetwork::call(NodeId from, NodeId to, MessageKind kind, std::size_t payload_bytes) {
  bool resolved = false;
  bool delivered = false;
  Message msg{from, to, kind, 0, payload_bytes, 0};
  send(
      msg, [&] { resolved = delivered = true; }, [&] { resolved = true; });
  while (!resolved) step();
  return delivered;
}

void SimNetwork::fail(NodeId id) {
  auto it = nodes_.find(id);
  if (it == nodes_.end() || !it->second.live()) throw Error(ErrorCode::NoSuchNode, "no live node " + id.hex());
  it->second.status = NodeStatus::Failed;
  metrics_.bump("failures");
}

SimTime SimNetwork::run_until_quiescent(SimTime max_ticks) {
  const SimTime start = clock_;
  while (!queue_.empty()) {
    if (queue_.top().time > start + max_ticks)
      throw Error(ErrorCode::LivelockSuspected,
                  std::to_string(queue_.size()) + " events pending after " + std::to_string(max_ticks) + " ticks");
    step();
  }
  return clock_ - start;
}

void SimNetwork::advance(SimTime ticks) {
  const SimTime target = clock_ + ticks;
  while (!queue_.empty() && queue_.top().time <= target) step();
  move_clock(target);
}

}  // namespace p2pdeploy
