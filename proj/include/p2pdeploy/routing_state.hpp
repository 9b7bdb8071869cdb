#pragma once

#include <array>
#include <optional>
#include <vector>

#include "p2pdeploy/node_id.hpp"

namespace p2pdeploy {

// Up to kSize / 2 nearest ids on each side of the owner, ordered by circular
// offset from the owner (nearest first). Never holds the owner itself.
class LeafSet {
 public:
  static constexpr int kSize = 8;
  static constexpr int kHalf = kSize / 2;

  LeafSet() = default;
  explicit LeafSet(NodeId owner) : owner_(owner) {}

  NodeId owner() const { return owner_; }
  const std::vector<NodeId>& left() const { return left_; }
  const std::vector<NodeId>& right() const { return right_; }

  // Union of both sides, right side first.
  std::vector<NodeId> members() const;
  bool contains(NodeId id) const;
  bool empty() const { return left_.empty() && right_.empty(); }
  std::size_t size() const { return left_.size() + right_.size(); }

  // Offers ids; the set keeps the nearest per side. Returns true if changed.
  bool insert(NodeId id);
  bool insert_all(const std::vector<NodeId>& ids);
  bool remove(NodeId id);

  // When a side holds fewer than kHalf entries, the owner knows every node and
  // the range is the whole ring.
  bool full() const {
    return left_.size() == static_cast<std::size_t>(kHalf) &&
           right_.size() == static_cast<std::size_t>(kHalf);
  }
  bool covers(Key k) const;

 private:
  void rebuild(std::vector<NodeId> pool);

  NodeId owner_;
  std::vector<NodeId> left_;
  std::vector<NodeId> right_;
};

// Prefix table: cell (r, c) holds an id sharing exactly r leading digits with the
// owner and having digit c at position r.
class RoutingTable {
 public:
  static constexpr int kRows = NodeId::kDigits;
  static constexpr int kCols = NodeId::kRadix;

  RoutingTable() = default;
  explicit RoutingTable(NodeId owner) : owner_(owner) {}

  NodeId owner() const { return owner_; }
  const std::optional<NodeId>& cell(int row, int col) const { return cells_[row][col]; }

  // Fills the matching cell when it is empty. Returns true if stored.
  bool insert(NodeId id);
  bool remove(NodeId id);
  bool contains(NodeId id) const;
  std::vector<NodeId> entries() const;
  std::vector<NodeId> row(int r) const;

  // Checks every occupied cell against its prefix/digit predicate.
  bool sound() const;

 private:
  NodeId owner_;
  std::array<std::array<std::optional<NodeId>, kCols>, kRows> cells_{};
};

// Routing state of one peer. next_hop() is a pure function of it.
struct RoutingState {
  NodeId id;
  LeafSet leaf_set;
  RoutingTable table;

  explicit RoutingState(NodeId self) : id(self), leaf_set(self), table(self) {}

  // Leaf set and table entries, deduplicated, ascending.
  std::vector<NodeId> known() const;
  void learn(NodeId other);
  void learn_all(const std::vector<NodeId>& others);
  // Drops `other` everywhere. Returns true if the leaf set lost an entry.
  bool forget(NodeId other);
};

NodeId next_hop(const RoutingState& state, Key k);

}  // namespace p2pdeploy
