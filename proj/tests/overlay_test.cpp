#include <gtest/gtest.h>

#include <set>

#include "p2pdeploy/overlay.hpp"
#include "test_support.hpp"

using namespace p2pdeploy;
using namespace p2pdeploy::testkit;

namespace {

std::vector<NodeId> live(const SimNetwork& net) { return net.live_ids(); }

// Every hop either strictly shrinks distance to the key (leaf-set delivery) or
// strictly improves (prefix, -distance). No node repeats.
void expect_progress(const std::vector<NodeId>& path, Key k) {
  std::set<NodeId> seen;
  for (std::size_t i = 0; i < path.size(); ++i) {
    EXPECT_TRUE(seen.insert(path[i]).second) << "repeat at hop " << i;
    if (i == 0) continue;
    int pa = oracle_prefix(path[i - 1], k), pb = oracle_prefix(path[i], k);
    uint128 da = oracle_distance(path[i - 1], k), db = oracle_distance(path[i], k);
    EXPECT_TRUE(db < da || pb > pa) << "no progress at hop " << i;
  }
}

}  // namespace

TEST(Route, SingleNodePathIsStart) {
  SimNetwork net(1);
  join(net, "solo", NodeId(42), std::nullopt);
  std::mt19937_64 gen(1);
  for (int i = 0; i < 50; ++i) {
    auto path = route(net, NodeId(42), random_id(gen));
    ASSERT_EQ(path, std::vector<NodeId>{NodeId(42)});
  }
}

TEST(Route, StartAtRootIsZeroHops) {
  SimNetwork net(2);
  std::mt19937_64 gen(2);
  auto ids = build_network(net, 32, gen);
  for (int i = 0; i < 64; ++i) {
    Key k = random_id(gen);
    NodeId r = oracle_root(ids, k);
    EXPECT_EQ(route(net, r, k), std::vector<NodeId>{r});
  }
}

TEST(Route, EndpointMatchesFullScanOracle) {
  SimNetwork net(3);
  std::mt19937_64 gen(3);
  auto ids = build_network(net, 64, gen);
  for (int i = 0; i < 256; ++i) {
    Key k = random_id(gen);
    NodeId start = ids[gen() % ids.size()];
    auto path = route(net, start, k);
    ASSERT_EQ(path.front(), start);
    EXPECT_EQ(path.back(), oracle_root(ids, k));
    EXPECT_LE(path.size(), 32u + 4u + 2u);
    expect_progress(path, k);
  }
}

TEST(Route, DeadStartRejected) {
  SimNetwork net(4);
  std::mt19937_64 gen(4);
  auto ids = build_network(net, 4, gen);
  net.fail(ids[1]);
  EXPECT_THROW(route(net, ids[1], NodeId(5)), Error);
}

TEST(Join, EmptyNetwork) {
  SimNetwork net(5);
  auto report = join(net, "first", NodeId(7), std::nullopt);
  EXPECT_TRUE(net.is_live(NodeId(7)));
  EXPECT_TRUE(net.node(NodeId(7)).routing.leaf_set.empty());
  EXPECT_EQ(report.join_path, std::vector<NodeId>{NodeId(7)});
}

TEST(Join, OneNodeNetworkBothListEachOther) {
  SimNetwork net(6);
  join(net, "a", NodeId(100), std::nullopt);
  join(net, "b", NodeId::from_parts(1ull << 63, 0), NodeId(100));
  EXPECT_TRUE(net.node(NodeId(100)).routing.leaf_set.contains(NodeId::from_parts(1ull << 63, 0)));
  EXPECT_TRUE(net.node(NodeId::from_parts(1ull << 63, 0)).routing.leaf_set.contains(NodeId(100)));
}

TEST(Join, OracleAgreementAfterEverySequentialJoin) {
  SimNetwork net(7);
  std::mt19937_64 gen(7);
  std::vector<NodeId> ids;
  for (int i = 0; i < 32; ++i) {
    NodeId id = random_id(gen);
    std::optional<NodeId> boot;
    if (!ids.empty()) boot = ids[gen() % ids.size()];
    join(net, "n" + std::to_string(i), id, boot);
    ids.push_back(id);
    for (int p = 0; p < 64; ++p) {
      Key k = random_id(gen);
      NodeId start = ids[gen() % ids.size()];
      ASSERT_EQ(route(net, start, k).back(), oracle_root(ids, k)) << "after join " << i;
    }
  }
}

TEST(Join, DuplicateIdRejected) {
  SimNetwork net(8);
  join(net, "a", NodeId(1), std::nullopt);
  try {
    join(net, "b", NodeId(1), NodeId(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DuplicateNode);
  }
}

TEST(Join, DeadBootstrapRejected) {
  SimNetwork net(9);
  join(net, "a", NodeId(1), std::nullopt);
  join(net, "b", NodeId(2), NodeId(1));
  net.fail(NodeId(1));
  try {
    join(net, "c", NodeId(3), NodeId(1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BootstrapUnreachable);
  }
  EXPECT_FALSE(net.contains(NodeId(3)));
}

TEST(Join, NonEmptyNetworkNeedsBootstrap) {
  SimNetwork net(10);
  join(net, "a", NodeId(1), std::nullopt);
  EXPECT_THROW(join(net, "b", NodeId(2), std::nullopt), Error);
}

TEST(Leave, UnknownIdRejected) {
  SimNetwork net(11);
  try {
    leave(net, NodeId(3), true);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoSuchNode);
  }
}

TEST(Leave, GracefulDepartureRemovesNodeFromEveryTable) {
  SimNetwork net(12);
  std::mt19937_64 gen(12);
  auto ids = build_network(net, 24, gen);
  leave(net, ids[5], true);
  leave(net, ids[11], true);
  stabilize_all(net);
  for (NodeId id : net.live_ids()) {
    auto known = net.node(id).routing.known();
    EXPECT_EQ(std::count(known.begin(), known.end(), ids[5]), 0);
    EXPECT_EQ(std::count(known.begin(), known.end(), ids[11]), 0);
  }
  auto rest = live(net);
  for (int i = 0; i < 100; ++i) {
    Key k = random_id(gen);
    EXPECT_EQ(route(net, rest[gen() % rest.size()], k).back(), oracle_root(rest, k));
  }
}

TEST(Leave, AbruptFailureRoutesAroundDeadNode) {
  SimNetwork net(13);
  std::mt19937_64 gen(13);
  auto ids = build_network(net, 32, gen);
  net.fail(ids[3]);
  auto rest = live(net);
  for (int i = 0; i < 200; ++i) {
    Key k = random_id(gen);
    EXPECT_EQ(route(net, rest[gen() % rest.size()], k).back(), oracle_root(rest, k));
  }
}

TEST(OverlayInvariants, RoutingTablesSound) {
  SimNetwork net(14);
  std::mt19937_64 gen(14);
  build_network(net, 48, gen);
  for (NodeId id : net.live_ids()) EXPECT_TRUE(net.node(id).routing.table.sound());
}

TEST(OverlayInvariants, LeafSetSymmetryAfterStabilize) {
  SimNetwork net(15);
  std::mt19937_64 gen(15);
  auto ids = build_network(net, 40, gen);
  net.fail(ids[2]);
  leave(net, ids[9], true);
  stabilize_all(net);
  stabilize_all(net);
  auto rest = live(net);
  // b is among a's 4 nearest on one side iff a is among b's 4 nearest on the other
  auto nearest = [&](NodeId a) {
    std::vector<NodeId> others;
    for (NodeId o : rest)
      if (o != a) others.push_back(o);
    std::set<NodeId> out;
    auto cw = others;
    std::sort(cw.begin(), cw.end(), [&](NodeId x, NodeId y) { return x.value() - a.value() < y.value() - a.value(); });
    for (std::size_t i = 0; i < 4 && i < cw.size(); ++i) out.insert(cw[i]);
    std::sort(cw.begin(), cw.end(), [&](NodeId x, NodeId y) { return a.value() - x.value() < a.value() - y.value(); });
    for (std::size_t i = 0; i < 4 && i < cw.size(); ++i) out.insert(cw[i]);
    return out;
  };
  for (NodeId a : rest) {
    auto expect = nearest(a);
    for (NodeId b : net.node(a).routing.leaf_set.members()) {
      EXPECT_TRUE(expect.count(b)) << "stale leaf";
      if (nearest(b).count(a)) EXPECT_TRUE(net.node(b).routing.leaf_set.contains(a));
    }
    for (NodeId b : expect) EXPECT_TRUE(net.node(a).routing.leaf_set.contains(b)) << "missing leaf";
  }
}

TEST(OverlayInvariants, DeterministicReplay) {
  auto run = [](std::uint64_t seed) {
    SimNetwork net(seed);
    std::mt19937_64 gen(seed);
    build_network(net, 32, gen);
    std::vector<std::vector<NodeId>> paths;
    auto ids = net.live_ids();
    for (int i = 0; i < 32; ++i) paths.push_back(route(net, ids[gen() % ids.size()], random_id(gen)));
    return std::make_pair(paths, net.now());
  };
  EXPECT_EQ(run(21), run(21));
}
