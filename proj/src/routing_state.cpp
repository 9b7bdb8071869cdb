#include "p2pdeploy/routing_state.hpp"

#include <algorithm>

namespace p2pdeploy {

std::vector<NodeId> LeafSet::members() const {
  std::vector<NodeId> out(right_);
  out.insert(out.end(), left_.begin(), left_.end());
  return out;
}

bool LeafSet::contains(NodeId id) const {
  return std::find(left_.begin(), left_.end(), id) != left_.end() ||
         std::find(right_.begin(), right_.end(), id) != right_.end();
}

void LeafSet::rebuild(std::vector<NodeId> pool) {
  std::erase(pool, owner_);
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());

  // Each id goes to the side it is nearer on; a short side then borrows the
  // other side's overflow, continuing past the antipode.
  auto cw = [&](NodeId id) { return clockwise_offset(owner_, id); };
  auto ccw = [&](NodeId id) { return clockwise_offset(id, owner_); };
  std::vector<NodeId> right, left;
  for (NodeId id : pool) (cw(id) <= ccw(id) ? right : left).push_back(id);
  std::sort(right.begin(), right.end(), [&](NodeId a, NodeId b) { return cw(a) < cw(b); });
  std::sort(left.begin(), left.end(), [&](NodeId a, NodeId b) { return ccw(a) < ccw(b); });

  const auto half = static_cast<std::size_t>(kHalf);
  right_.assign(right.begin(), right.begin() + static_cast<std::ptrdiff_t>(std::min(half, right.size())));
  left_.assign(left.begin(), left.begin() + static_cast<std::ptrdiff_t>(std::min(half, left.size())));
  for (auto it = right.rbegin(); left_.size() < half && right.size() - (it - right.rbegin()) > right_.size(); ++it)
    left_.push_back(*it);
  for (auto it = left.rbegin(); right_.size() < half && left.size() - (it - left.rbegin()) > left_.size(); ++it)
    right_.push_back(*it);
}

bool LeafSet::insert(NodeId id) {
  if (id == owner_ || contains(id)) return false;
  auto pool = members();
  pool.push_back(id);
  rebuild(std::move(pool));
  return contains(id);
}

bool LeafSet::insert_all(const std::vector<NodeId>& ids) {
  auto before_left = left_;
  auto before_right = right_;
  auto pool = members();
  pool.insert(pool.end(), ids.begin(), ids.end());
  rebuild(std::move(pool));
  return before_left != left_ || before_right != right_;
}

bool LeafSet::remove(NodeId id) {
  if (!contains(id)) return false;
  std::erase(left_, id);
  std::erase(right_, id);
  // Rebalance: with few known nodes one side may borrow from the other.
  rebuild(members());
  return true;
}

bool LeafSet::covers(Key k) const {
  if (!full()) return true;
  NodeId leftmost = left_.back();
  NodeId rightmost = right_.back();
  return clockwise_offset(leftmost, k) <= clockwise_offset(leftmost, rightmost);
}

bool RoutingTable::insert(NodeId id) {
  int r = shared_prefix_len(owner_, id);
  if (r == NodeId::kDigits) return false;
  auto& slot = cells_[r][id.digit(r)];
  if (slot) return false;
  slot = id;
  return true;
}

bool RoutingTable::remove(NodeId id) {
  int r = shared_prefix_len(owner_, id);
  if (r == NodeId::kDigits) return false;
  auto& slot = cells_[r][id.digit(r)];
  if (slot != id) return false;
  slot.reset();
  return true;
}

bool RoutingTable::contains(NodeId id) const {
  int r = shared_prefix_len(owner_, id);
  if (r == NodeId::kDigits) return false;
  return cells_[r][id.digit(r)] == id;
}

std::vector<NodeId> RoutingTable::entries() const {
  std::vector<NodeId> out;
  for (const auto& row : cells_)
    for (const auto& cell : row)
      if (cell) out.push_back(*cell);
  return out;
}

std::vector<NodeId> RoutingTable::row(int r) const {
  std::vector<NodeId> out;
  for (const auto& cell : cells_[r])
    if (cell) out.push_back(*cell);
  return out;
}

bool RoutingTable::sound() const {
  for (int r = 0; r < kRows; ++r) {
    for (int c = 0; c < kCols; ++c) {
      const auto& cell = cells_[r][c];
      if (!cell) continue;
      if (c == owner_.digit(r)) return false;
      if (shared_prefix_len(owner_, *cell) != r || cell->digit(r) != c) return false;
    }
  }
  return true;
}

std::vector<NodeId> RoutingState::known() const {
  auto out = table.entries();
  auto leaves = leaf_set.members();
  out.insert(out.end(), leaves.begin(), leaves.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

void RoutingState::learn(NodeId other) {
  if (other == id) return;
  leaf_set.insert(other);
  table.insert(other);
}

void RoutingState::learn_all(const std::vector<NodeId>& others) {
  leaf_set.insert_all(others);
  for (NodeId o : others)
    if (o != id) table.insert(o);
}

bool RoutingState::forget(NodeId other) {
  table.remove(other);
  return leaf_set.remove(other);
}

NodeId next_hop(const RoutingState& state, Key k) {
  const NodeId self = state.id;

  if (state.leaf_set.covers(k)) {
    NodeId best = self;
    for (NodeId m : state.leaf_set.members())
      if (closer_to(k, m, best)) best = m;
    return best;
  }

  const int r = shared_prefix_len(self, k);
  if (r == NodeId::kDigits) return self;
  if (const auto& cell = state.table.cell(r, k.digit(r))) return *cell;

  // Rare case: any known id at least as far along the prefix and numerically
  // closer than self.
  const uint128 self_dist = circular_distance(self, k);
  std::optional<NodeId> best;
  int best_prefix = -1;
  uint128 best_dist = 0;
  for (NodeId id : state.known()) {
    int p = shared_prefix_len(id, k);
    if (p < r) continue;
    uint128 d = circular_distance(id, k);
    if (d >= self_dist) continue;
    bool better = !best || p > best_prefix || (p == best_prefix && (d < best_dist || (d == best_dist && id < *best)));
    if (better) {
      best = id;
      best_prefix = p;
      best_dist = d;
    }
  }
  return best.value_or(self);
}

}  // namespace p2pdeploy
