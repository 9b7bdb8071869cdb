#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <queue>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "p2pdeploy/component_store.hpp"
#include "p2pdeploy/node_id.hpp"
#include "p2pdeploy/routing_state.hpp"

namespace p2pdeploy {

enum class NodeStatus { Joining, Live, Departed, Failed };

std::string_view to_string(NodeStatus s);

// One peer: overlay routing state plus its local component store.
struct OverlayNode {
  std::string name;
  RoutingState routing;
  ComponentStore store;
  NodeStatus status = NodeStatus::Joining;

  OverlayNode(std::string label, NodeId id, StoreConfig config)
      : name(std::move(label)), routing(id), store(config) {}

  NodeId id() const { return routing.id; }
  bool live() const { return status == NodeStatus::Live; }
};

enum class MessageKind { Join, RouteStep, Lookup, Publish, Transfer, Repair, Ack, Leave, Remove, Ping };

inline constexpr std::size_t kMessageKinds = 10;
std::string_view to_string(MessageKind k);

struct Message {
  NodeId from;
  NodeId to;
  MessageKind kind = MessageKind::RouteStep;
  std::uint64_t correlation = 0;
  std::size_t payload_bytes = 0;
  SimTime deadline = 0;
};

struct NetConfig {
  SimTime latency_min = 10;
  SimTime latency_max = 100;  // exclusive
  SimTime timeout = 500;
  int retries = 3;
  SimTime maintenance_interval = 100;
  // Evict idle TRAIL/CACHE entries on every live node at each maintenance tick.
  bool periodic_eviction = true;
  StoreConfig store;
};

struct Metrics {
  std::array<std::uint64_t, kMessageKinds> sent{};
  std::array<std::uint64_t, kMessageKinds> delivered{};
  std::array<std::uint64_t, kMessageKinds> timeouts{};
  // operation -> hop count -> occurrences
  std::map<std::string, std::map<int, std::uint64_t>> hops;
  std::map<std::string, std::uint64_t> counters;

  struct ReplicaSample {
    SimTime time;
    std::string name;
    std::size_t replicas;
  };
  std::vector<ReplicaSample> replica_samples;

  void record_hops(const std::string& op, int hops) { ++this->hops[op][hops]; }
  void bump(const std::string& counter, std::uint64_t by = 1) { counters[counter] += by; }
};

// Discrete-event transport among overlay nodes. Time is integral ticks; events
// are ordered by (time, insertion sequence), so a seed plus a command sequence
// replays exactly.
class SimNetwork {
 public:
  using Handler = std::function<void()>;
  using MaintenanceHook = std::function<void(SimNetwork&)>;

  explicit SimNetwork(std::uint64_t seed, NetConfig config = {});

  const NetConfig& config() const { return config_; }
  std::uint64_t seed() const { return seed_; }
  SimTime now() const { return clock_; }
  std::mt19937_64& rng() { return rng_; }
  Metrics& metrics() { return metrics_; }
  const Metrics& metrics() const { return metrics_; }

  // Node registry. Departed and failed nodes stay registered for reporting.
  OverlayNode& add_node(std::string name, NodeId id);
  void erase_node(NodeId id);
  bool contains(NodeId id) const { return nodes_.count(id) != 0; }
  bool is_live(NodeId id) const;
  OverlayNode& node(NodeId id);
  const OverlayNode& node(NodeId id) const;
  const std::map<NodeId, OverlayNode>& nodes() const { return nodes_; }
  std::map<NodeId, OverlayNode>& nodes() { return nodes_; }
  std::vector<NodeId> live_ids() const;
  OverlayNode* find_by_name(std::string_view name);

  // Schedules delivery at now + latency, or a timeout at the deadline when the
  // destination is not live. Exactly one of the two handlers eventually runs.
  std::uint64_t send(Message msg, Handler on_deliver, Handler on_timeout = {});

  // send() and process events until that message resolves. Returns true on delivery.
  bool call(NodeId from, NodeId to, MessageKind kind, std::size_t payload_bytes = 0);

  // Abrupt failure: the node stops answering; no notification is sent.
  void fail(NodeId id);

  bool idle() const { return queue_.empty(); }
  std::size_t pending() const { return queue_.size(); }

  // Processes events until the queue drains. Throws LivelockSuspected when an
  // event lies more than max_ticks past the starting clock.
  SimTime run_until_quiescent(SimTime max_ticks);

  // Processes every event up to now + ticks and moves the clock there.
  void advance(SimTime ticks);

  // Runs at every multiple of maintenance_interval the clock crosses.
  void add_maintenance(MaintenanceHook hook) { maintenance_.push_back(std::move(hook)); }

  // Uniform integer in [0, bound) from the shared generator.
  std::uint64_t uniform(std::uint64_t bound);
  double uniform_real();

 private:
  struct Event {
    SimTime time;
    std::uint64_t seq;
    bool timeout;
    Message msg;
    Handler on_deliver;
    Handler on_timeout;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const {
      return a.time != b.time ? a.time > b.time : a.seq > b.seq;
    }
  };

  void push(Event e);
  void step();
  void move_clock(SimTime to);

  std::uint64_t seed_;
  NetConfig config_;
  std::mt19937_64 rng_;
  SimTime clock_ = 0;
  SimTime next_maintenance_;
  std::uint64_t seq_ = 0;
  std::uint64_t correlation_ = 0;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::map<NodeId, OverlayNode> nodes_;
  std::vector<MaintenanceHook> maintenance_;
  Metrics metrics_;
};

}  // namespace p2pdeploy
