#include <gtest/gtest.h>

#include <random>
#include <set>

#include "support.hpp"
#include "xchain/chain_sim.hpp"
#include "xchain/error.hpp"

using namespace xchain;
using xchain::testing::chain_params;

namespace {

const KeyPair kAlice = KeyPair::from_label("alice");
const KeyPair kBob = KeyPair::from_label("bob");

SimChain funded(std::uint32_t difficulty = 0, double eps = 0.0) {
  return SimChain(chain_params("btc", difficulty, eps), {{kAlice.pk, 1000}});
}

void mine(SimChain& c, Rng& rng, int n, Tick& now) {
  for (int i = 0; i < n; ++i) c.mine_block(rng, ++now);
}

// Longest chain, ties to the smallest digest, computed from the raw tree.
BlockId oracle_tip(const SimChain& c) {
  std::optional<BlockId> best;
  std::uint64_t h = 0;
  for (const auto& id : c.all_blocks()) {
    const auto bh = c.block(id).header.height;
    if (!best || bh > h || (bh == h && id < *best)) {
      best = id;
      h = bh;
    }
  }
  return *best;
}

void check_links(const SimChain& c) {
  const auto& canon = c.canonical();
  for (std::size_t i = 1; i < canon.size(); ++i) {
    const auto& h = c.block(canon[i]).header;
    ASSERT_EQ(h.prev, canon[i - 1]);
    ASSERT_EQ(h.height, i);
    ASSERT_TRUE(pow_valid(h, c.params().pow_difficulty));
  }
}

}  // namespace

TEST(SimClock, NeverMovesBackwards) {
  SimClock clock;
  clock.advance_to(5);
  EXPECT_EQ(clock.now, 5);
  clock.advance_to(5);
  EXPECT_THROW(clock.advance_to(4), Error);
}

TEST(SimChain, RejectsBadParams) {
  EXPECT_THROW(SimChain(chain_params("x", 0, 1.5), {}), Error);
  EXPECT_THROW(SimChain(chain_params("x", 0, -0.1), {}), Error);
  auto p = chain_params("x");
  p.block_interval = 0;
  EXPECT_THROW(SimChain(p, {}), Error);
}

TEST(SimChain, GenesisOnly) {
  auto c = funded(4);
  EXPECT_EQ(c.height(), 0u);
  EXPECT_EQ(c.tip(), c.genesis());
  EXPECT_TRUE(pow_valid(c.block(c.genesis()).header, 4));
  EXPECT_EQ(c.state().balance(kAlice.pk), 1000u);
  EXPECT_THROW(c.block(Digest{}), Error);
}

TEST(SimChain, MinesPendingTxAndTracksConfirmations) {
  auto c = funded(6);
  Rng rng(1);
  Tick now = 0;
  const ChainTx t = make_transfer("btc", kAlice, kBob.pk, 10, 1);
  c.submit_tx(t);
  EXPECT_TRUE(c.in_mempool(t.id()));
  EXPECT_THROW(c.submit_tx(t), Error);
  const BlockId b = c.mine_block(rng, ++now);
  EXPECT_FALSE(c.in_mempool(t.id()));
  const auto loc = c.locate_tx(t.id());
  ASSERT_TRUE(loc);
  EXPECT_EQ(loc->block, b);
  EXPECT_EQ(loc->height, 1u);
  EXPECT_EQ(c.confirmations(b), 0u);
  EXPECT_THROW(c.submit_tx(t), Error);
  mine(c, rng, 5, now);
  EXPECT_EQ(c.confirmations(b), 5u);
  EXPECT_FALSE(c.is_stable(b, 6));
  mine(c, rng, 1, now);
  EXPECT_TRUE(c.is_stable(b, 6));
  EXPECT_EQ(c.state().balance(kBob.pk), 10u);
  check_links(c);
}

TEST(SimChain, InvalidTxIsDroppedWithReason) {
  auto c = funded();
  Rng rng(1);
  const ChainTx t = make_transfer("btc", kBob, kAlice.pk, 10, 1);
  c.submit_tx(t);
  c.mine_block(rng, 1);
  EXPECT_FALSE(c.locate_tx(t.id()));
  const auto rec = c.drop_record(t.id());
  ASSERT_TRUE(rec);
  EXPECT_NE(rec->reason.find("InsufficientFunds"), std::string::npos);
  EXPECT_FALSE(c.in_mempool(t.id()));
}

TEST(SimChain, LongerForkReorgsAndReturnsTxsToMempool) {
  auto c = funded(2);
  Rng rng(3);
  Tick now = 0;
  mine(c, rng, 2, now);
  const BlockId fork_point = c.tip();
  const ChainTx t = make_transfer("btc", kAlice, kBob.pk, 10, 1);
  c.submit_tx(t);
  const BlockId b = c.mine_block(rng, ++now);
  ASSERT_TRUE(c.locate_tx(t.id()));

  const auto branch = c.inject_fork(fork_point, 2, {}, now);
  ASSERT_EQ(branch.size(), 2u);
  EXPECT_EQ(c.tip(), branch.back());
  EXPECT_FALSE(c.is_canonical(b));
  EXPECT_FALSE(c.confirmations(b));
  EXPECT_FALSE(c.locate_tx(t.id()));
  EXPECT_TRUE(c.in_mempool(t.id()));
  EXPECT_TRUE(c.in_any_block(t.id()));
  EXPECT_EQ(c.state().balance(kBob.pk), 0u);
  EXPECT_EQ(c.state(), c.replay_canonical());

  c.mine_block(rng, ++now);
  ASSERT_TRUE(c.locate_tx(t.id()));
  EXPECT_EQ(c.locate_tx(t.id())->height, 5u);
  EXPECT_EQ(c.state().balance(kBob.pk), 10u);
}

TEST(SimChain, ForkTxsAreAppliedOnTheBranch) {
  auto c = funded();
  Rng rng(3);
  const ChainTx t = make_transfer("btc", kAlice, kBob.pk, 7, 9);
  const auto branch = c.inject_fork(c.genesis(), 1, {{t}}, 1);
  EXPECT_EQ(c.tip(), branch.back());
  EXPECT_EQ(c.state().balance(kBob.pk), 7u);
  EXPECT_TRUE(c.locate_tx(t.id()));
}

TEST(SimChain, EqualHeightTieGoesToSmallerDigest) {
  for (int k = 0; k < 20; ++k) {
    auto c = funded();
    Rng rng(k);
    const BlockId honest = c.mine_block(rng, 1);
    const auto rival = c.inject_fork(c.genesis(), 1, {}, 1, "rival" + std::to_string(k));
    EXPECT_EQ(c.tip(), std::min(honest, rival.front()));
    EXPECT_EQ(c.tip(), oracle_tip(c));
  }
}

TEST(SimChain, ForkProbabilityOneAlwaysMinesSibling) {
  auto c = funded(0, 1.0);
  Rng rng(5);
  Tick now = 0;
  mine(c, rng, 10, now);
  EXPECT_EQ(c.sibling_count(), 10u);
  EXPECT_EQ(c.block_count(), 21u);
  EXPECT_EQ(c.height(), 10u);
  EXPECT_EQ(c.tip(), oracle_tip(c));
}

TEST(SimChain, AllowForkFalseKeepsRngStream) {
  auto a = funded(0, 0.5);
  auto b = funded(0, 0.5);
  Rng ra(9), rb(9);
  for (int i = 1; i <= 8; ++i) {
    a.mine_block(ra, i, true);
    b.mine_block(rb, i, false);
  }
  EXPECT_EQ(ra.next(), rb.next());
  EXPECT_EQ(b.sibling_count(), 0u);
}

TEST(SimChain, SameSeedSameTree) {
  auto run = [](std::uint64_t seed) {
    auto c = funded(3, 0.3);
    Rng rng(seed);
    Tick now = 0;
    for (int i = 0; i < 30; ++i) {
      if (i % 4 == 0) c.submit_tx(make_transfer("btc", kAlice, kBob.pk, 1, i));
      c.mine_block(rng, ++now);
    }
    return c.all_blocks();
  };
  EXPECT_EQ(run(77), run(77));
  EXPECT_NE(run(77), run(78));
}

// Random mining, submissions and forks. Checked after every step: the tip
// matches the tie rule, cached state equals a replay, every submitted tx is in
// exactly one of canon / mempool / dropped, and forks shorter than d never
// evict a d-deep block.
TEST(SimChainProperty, TreeInvariants) {
  constexpr std::uint32_t d = 3;
  std::mt19937_64 gen(99);
  for (int round = 0; round < 40; ++round) {
    auto c = SimChain(chain_params("btc", 1, 0.25), {{kAlice.pk, 100}, {kBob.pk, 100}});
    Rng rng(round);
    Tick now = 0;
    std::vector<Digest> submitted;
    std::set<BlockId> stable;
    for (int step = 0; step < 60; ++step) {
      const auto op = gen() % 10;
      if (op < 3) {
        const auto& from = gen() % 2 ? kAlice : kBob;
        const ChainTx t = make_transfer("btc", from, gen() % 2 ? kAlice.pk : kBob.pk, gen() % 80, step);
        c.submit_tx(t);
        submitted.push_back(t.id());
      } else if (op < 8) {
        c.mine_block(rng, ++now);
      } else {
        const auto& canon = c.canonical();
        const std::size_t back = std::min<std::size_t>(canon.size() - 1, gen() % (d + 2));
        const BlockId at = canon[canon.size() - 1 - back];
        c.inject_fork(at, 1 + gen() % d, {}, now, "adv" + std::to_string(step));
      }

      ASSERT_EQ(c.tip(), oracle_tip(c));
      ASSERT_EQ(c.state(), c.replay_canonical());
      check_links(c);
      for (const auto& id : submitted) {
        const int places = (c.locate_tx(id) ? 1 : 0) + (c.in_mempool(id) ? 1 : 0) + (c.drop_record(id) ? 1 : 0);
        ASSERT_EQ(places, 1) << "round " << round << " step " << step;
      }
      for (const auto& b : stable) ASSERT_TRUE(c.is_canonical(b)) << "stable block evicted";
      for (const auto& b : c.canonical())
        if (c.is_stable(b, d)) stable.insert(b);
    }
  }
}
