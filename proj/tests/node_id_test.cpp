#include <gtest/gtest.h>

#include <random>

#include "p2pdeploy/error.hpp"
#include "p2pdeploy/node_id.hpp"
#include "test_support.hpp"

using namespace p2pdeploy;

// Golden values computed with Python's hashlib.sha1, first 16 bytes.
TEST(DeriveKey, MatchesTruncatedSha1) {
  EXPECT_EQ(derive_key("log.jar").hex(), "f622ce0eb10f562717e0cddcd6cd0aca");
  EXPECT_EQ(derive_key("abc").hex(), "a9993e364706816aba3e25717850c26c");
  EXPECT_EQ(derive_key("n0").hex(), "d8273e2f4a7c0a59554544c6605cdd8b");
}

TEST(DeriveKey, EmptyNameIsRejected) {
  try {
    derive_key("");
    FAIL() << "expected invalid-name";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidName);
  }
}

TEST(DeriveKey, Deterministic) {
  std::mt19937_64 gen(11);
  for (int i = 0; i < 1000; ++i) {
    std::string s(1 + gen() % 40, ' ');
    for (auto& c : s) c = static_cast<char>(32 + gen() % 95);
    ASSERT_EQ(derive_key(s), derive_key(std::string(s)));
  }
}

TEST(NodeId, DigitsRoundTrip) {
  std::mt19937_64 gen(3);
  for (int i = 0; i < 500; ++i) {
    NodeId id = testkit::random_id(gen);
    auto digits = id.digits();
    EXPECT_EQ(NodeId::from_digits(digits), id);
    EXPECT_EQ(NodeId::from_hex(id.hex()), id);
  }
}

TEST(NodeId, FromHexRejectsGarbage) {
  EXPECT_THROW(NodeId::from_hex("abc"), Error);
  EXPECT_THROW(NodeId::from_hex(std::string(31, '0') + "G"), Error);
}

TEST(SharedPrefix, Examples) {
  NodeId a = NodeId::from_hex("0123456789abcdef0123456789abcdef");
  EXPECT_EQ(shared_prefix_len(a, a), 32);
  EXPECT_EQ(shared_prefix_len(NodeId(0), NodeId::from_parts(0x8000000000000000ULL, 0)), 0);
  EXPECT_EQ(shared_prefix_len(a, NodeId::from_hex("0123456789abcdef0123456789abcdee")), 31);
}

TEST(SharedPrefix, AgreesWithDigitLoop) {
  std::mt19937_64 gen(5);
  for (int i = 0; i < 2000; ++i) {
    NodeId a = testkit::random_id(gen);
    // Force long shared prefixes on half the samples.
    NodeId b = i % 2 ? testkit::random_id(gen) : NodeId(a.value() ^ (uint128(1) << (gen() % 128)));
    EXPECT_EQ(shared_prefix_len(a, b), testkit::oracle_prefix(a, b));
  }
}

TEST(CircularDistance, Examples) {
  const uint128 half = uint128(1) << 127;
  EXPECT_EQ(circular_distance(NodeId(5), NodeId(5)), 0u);
  EXPECT_TRUE(circular_distance(NodeId(0), NodeId(half)) == half);
  EXPECT_TRUE(circular_distance(NodeId(~uint128(0)), NodeId(0)) == 1);
}

TEST(CircularDistance, SymmetricAndMatchesOracle) {
  std::mt19937_64 gen(8);
  for (int i = 0; i < 2000; ++i) {
    NodeId a = testkit::random_id(gen), b = testkit::random_id(gen);
    EXPECT_TRUE(circular_distance(a, b) == circular_distance(b, a));
    EXPECT_TRUE(circular_distance(a, b) == testkit::oracle_distance(a, b));
  }
}
