#include <gtest/gtest.h>

#include <random>
#include <set>

#include "p2pdeploy/overlay.hpp"
#include "test_support.hpp"

using namespace p2pdeploy;
using namespace p2pdeploy::testkit;

namespace {

// Naive restatement of the four forwarding rules over flat lists of known
// ids. The covered arc runs clockwise from the farthest left member to the
// farthest right member.
NodeId naive_next_hop(NodeId self, const std::vector<NodeId>& left, const std::vector<NodeId>& right,
                      const std::vector<NodeId>& table, bool leaf_full, Key k) {
  auto better = [&](NodeId a, NodeId b) {
    uint128 da = oracle_distance(a, k), db = oracle_distance(b, k);
    return da < db || (da == db && a.value() < b.value());
  };
  std::vector<NodeId> leaves(left);
  leaves.insert(leaves.end(), right.begin(), right.end());
  bool in_range = true;
  if (leaf_full) {
    NodeId lo = left[0], hi = right[0];
    for (NodeId m : left)
      if (self.value() - m.value() > self.value() - lo.value()) lo = m;
    for (NodeId m : right)
      if (m.value() - self.value() > hi.value() - self.value()) hi = m;
    in_range = (k.value() - lo.value()) <= (hi.value() - lo.value());
  }
  if (in_range) {
    NodeId best = self;
    for (NodeId m : leaves)
      if (better(m, best)) best = m;
    return best;
  }
  int r = oracle_prefix(self, k);
  for (NodeId t : table)
    if (oracle_prefix(self, t) == r && t.digit(r) == k.digit(r)) return t;
  std::vector<NodeId> all(leaves);
  all.insert(all.end(), table.begin(), table.end());
  std::optional<NodeId> pick;
  for (NodeId c : all) {
    if (oracle_prefix(c, k) < r || oracle_distance(c, k) >= oracle_distance(self, k)) continue;
    if (!pick) {
      pick = c;
      continue;
    }
    int pc = oracle_prefix(c, k), pp = oracle_prefix(*pick, k);
    if (pc > pp || (pc == pp && better(c, *pick))) pick = c;
  }
  return pick.value_or(self);
}

}  // namespace

TEST(LeafSet, InvariantsUnderRandomInsertsAndRemovals) {
  std::mt19937_64 gen(21);
  for (int round = 0; round < 50; ++round) {
    NodeId self = random_id(gen);
    LeafSet ls(self);
    std::vector<NodeId> inserted;
    for (int i = 0; i < 40; ++i) {
      NodeId id = random_id(gen);
      ls.insert(id);
      inserted.push_back(id);
      if (gen() % 4 == 0) ls.remove(inserted[gen() % inserted.size()]);
      ASSERT_LE(ls.left().size(), 4u);
      ASSERT_LE(ls.right().size(), 4u);
      ASSERT_FALSE(ls.contains(self));
      auto members = ls.members();
      std::set<NodeId> unique(members.begin(), members.end());
      ASSERT_EQ(unique.size(), members.size());
      for (std::size_t j = 1; j < ls.right().size(); ++j)
        ASSERT_LT(clockwise_offset(self, ls.right()[j - 1]), clockwise_offset(self, ls.right()[j]));
      for (std::size_t j = 1; j < ls.left().size(); ++j)
        ASSERT_LT(clockwise_offset(ls.left()[j - 1], self), clockwise_offset(ls.left()[j], self));
    }
  }
}

TEST(LeafSet, KeepsNearestFourPerSide) {
  NodeId self(1000);
  LeafSet ls(self);
  for (int i = 1; i <= 10; ++i) {
    ls.insert(NodeId(1000 + 10 * i));
    ls.insert(NodeId(1000 - 10 * i));
  }
  EXPECT_EQ(ls.right(), (std::vector<NodeId>{NodeId(1010), NodeId(1020), NodeId(1030), NodeId(1040)}));
  EXPECT_EQ(ls.left(), (std::vector<NodeId>{NodeId(990), NodeId(980), NodeId(970), NodeId(960)}));
  EXPECT_TRUE(ls.covers(NodeId(965)));
  EXPECT_FALSE(ls.covers(NodeId(1041)));
}

TEST(LeafSet, RemovalLeavesOtherSideAlone) {
  NodeId self(1000);
  LeafSet ls(self);
  for (int i = 1; i <= 4; ++i) {
    ls.insert(NodeId(1000 + 10 * i));
    ls.insert(NodeId(1000 - 10 * i));
  }
  ls.remove(NodeId(1020));
  EXPECT_EQ(ls.right(), (std::vector<NodeId>{NodeId(1010), NodeId(1030), NodeId(1040)}));
  EXPECT_EQ(ls.left(), (std::vector<NodeId>{NodeId(990), NodeId(980), NodeId(970), NodeId(960)}));
}

TEST(LeafSet, ShortSideBorrowsPastTheAntipode) {
  NodeId self(0);
  LeafSet ls(self);
  for (int i = 1; i <= 6; ++i) ls.insert(NodeId(uint128(i) << 100));
  ls.insert(NodeId(~uint128(0)));  // one node just counter-clockwise
  EXPECT_EQ(ls.right().size(), 4u);
  ASSERT_EQ(ls.left().size(), 3u);
  EXPECT_EQ(ls.left()[0], NodeId(~uint128(0)));
  EXPECT_EQ(ls.left()[1], NodeId(uint128(6) << 100));
  EXPECT_EQ(ls.left()[2], NodeId(uint128(5) << 100));
}

TEST(RoutingTable, CellsAreSound) {
  std::mt19937_64 gen(4);
  NodeId self = random_id(gen);
  RoutingTable table(self);
  for (int i = 0; i < 2000; ++i) {
    NodeId id = random_id(gen);
    if (i % 3 == 0) id = NodeId(self.value() ^ (uint128(gen()) >> (gen() % 64)));
    table.insert(id);
  }
  EXPECT_TRUE(table.sound());
  for (int r = 0; r < RoutingTable::kRows; ++r) EXPECT_FALSE(table.cell(r, self.digit(r)).has_value());
  EXPECT_FALSE(table.insert(self));
}

TEST(RootOf, Examples) {
  NodeId n(42);
  std::vector<NodeId> one{n};
  std::mt19937_64 gen(1);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(root_of(one, random_id(gen)), n);

  NodeId zero(0), half(uint128(1) << 127);
  std::vector<NodeId> two{zero, half};
  EXPECT_EQ(root_of(two, NodeId(uint128(1) << 124)), zero);

  // Equidistant: smaller raw id wins.
  std::vector<NodeId> tie{NodeId(10), NodeId(20)};
  EXPECT_EQ(root_of(tie, NodeId(15)), NodeId(10));

  std::vector<NodeId> none;
  EXPECT_THROW(root_of(none, NodeId(1)), Error);
}

TEST(RootOf, MatchesFullScanOracle) {
  std::mt19937_64 gen(64);
  std::vector<NodeId> ids;
  for (int i = 0; i < 64; ++i) ids.push_back(random_id(gen));
  for (int i = 0; i < 256; ++i) {
    Key k = random_id(gen);
    EXPECT_EQ(root_of(ids, k), oracle_root(ids, k));
  }
}

TEST(NextHop, SingleNodeAndSelfKey) {
  RoutingState state(NodeId(77));
  std::mt19937_64 gen(2);
  for (int i = 0; i < 32; ++i) EXPECT_EQ(next_hop(state, random_id(gen)), NodeId(77));

  std::mt19937_64 g2(9);
  RoutingState busy(random_id(g2));
  for (int i = 0; i < 100; ++i) busy.learn(random_id(g2));
  EXPECT_EQ(next_hop(busy, busy.id), busy.id);
}

TEST(NextHop, EnumeratedFiveNodeNetwork) {
  SimNetwork net(5);
  std::mt19937_64 gen(55);
  auto ids = build_network(net, 5, gen);
  for (NodeId id : ids) {
    const auto& st = net.node(id).routing;
    for (int d = 0; d < 16; ++d) {
      std::array<std::uint8_t, 32> digits{};
      digits[0] = static_cast<std::uint8_t>(d);
      for (int i = 1; i < 32; ++i) digits[i] = static_cast<std::uint8_t>((d * 7 + i * 3) % 16);
      Key k = NodeId::from_digits(digits);
      EXPECT_EQ(next_hop(st, k),
                naive_next_hop(id, st.leaf_set.left(), st.leaf_set.right(), st.table.entries(), st.leaf_set.full(), k))
          << "node " << id.hex() << " digit " << d;
    }
  }
}

TEST(NextHop, AgreesWithNaiveRulesOnRandomStates) {
  std::mt19937_64 gen(77);
  int outside_leaf_range = 0;
  for (int round = 0; round < 200; ++round) {
    RoutingState st(random_id(gen));
    int n = 9 + static_cast<int>(gen() % 60);
    for (int i = 0; i < n; ++i) {
      NodeId other = random_id(gen);
      // Some ids share prefixes with self so lower rows fill.
      if (i % 2 == 0) other = NodeId(st.id.value() ^ (uint128(gen()) << (gen() % 64)));
      if (gen() % 3 == 0) st.leaf_set.insert(other);
      else st.table.insert(other);
    }
    for (int i = 0; i < 64; ++i) {
      Key k = i % 2 ? random_id(gen) : NodeId(st.id.value() ^ (uint128(gen()) >> (gen() % 100)));
      if (!st.leaf_set.covers(k)) ++outside_leaf_range;
      ASSERT_EQ(next_hop(st, k), naive_next_hop(st.id, st.leaf_set.left(), st.leaf_set.right(), st.table.entries(), st.leaf_set.full(), k));
    }
  }
  EXPECT_GT(outside_leaf_range, 1000);
}
