#include <doctest.h>

#include <cmath>
#include <random>

#include "modform/allocation.hpp"
#include "modform/rng.hpp"
#include "oracles.hpp"

using namespace modform;

namespace {

// Hand-built bid without any real path behind it, for allocator-only tests.
Bid synthetic_bid(int module, int spot, double info, int cost, bool within) {
  Bid b;
  b.module_id = module;
  b.spot_id = spot;
  b.informativeness = info;
  b.cost = cost;
  PathPlan plan;
  plan.cost = cost;
  plan.informativeness = info;
  if (within)
    b.path = plan;
  else
    b.fallback_path = plan;
  return b;
}

std::vector<std::vector<Bid>> random_bids(std::mt19937_64& rng, int modules, int spots,
                                          double within_prob = 1.0) {
  std::vector<std::vector<Bid>> bids(modules);
  for (int i = 0; i < modules; ++i)
    for (int j = 0; j < spots; ++j)
      bids[i].push_back(synthetic_bid(i, j, uniform_real(rng, 0.0, 30.0),
                                      1 + static_cast<int>(uniform_index(rng, 44)),
                                      uniform_unit(rng) < within_prob));
  return bids;
}

GpState planning_state() { return GpState(GpHyperparams{2.0, 4.0, 0.1, 5.0}); }

}  // namespace

TEST_CASE("compute_bids covers every spot and lifts its own start") {
  GridMap map = generate_field(11, 12, 12, 1.0, 10.0);
  const GpState gp = planning_state();
  const EntropyField entropy(gp, map);

  std::vector<Spot> spots{{0, Pose{{5, 5}, Heading::East}, {}},
                          {1, Pose{{5, 6}, Heading::East}, {}},
                          {2, Pose{{6, 5}, Heading::East}, {}}};
  const TargetConfig config(std::move(spots), {{0, 1}, {0, 2}});

  CellSet starts(12, 12);
  starts.insert({4, 5});
  starts.insert({9, 9});

  const auto bids = compute_bids(0, {4, 5}, config, 45, entropy, map, starts);
  REQUIRE(bids.size() == 3);
  for (const Bid& b : bids) {
    CHECK(b.module_id == 0);
    CHECK(b.reachable());
  }
  CHECK(bids[0].cost == 1);  // adjacent spot
  CHECK(bids[0].within_budget());
}

TEST_CASE("compute_bids falls back to the shortest path beyond the budget") {
  GridMap map = generate_field(12, 20, 3, 1.0, 10.0);
  const GpState gp = planning_state();
  const EntropyField entropy(gp, map);
  std::vector<Spot> spots{{0, Pose{{19, 0}, Heading::East}, {}}};
  const TargetConfig config(std::move(spots), {});
  CellSet starts(20, 3);
  starts.insert({0, 0});

  const auto bids = compute_bids(0, {0, 0}, config, 10, entropy, map, starts);
  REQUIRE(bids.size() == 1);
  CHECK(!bids[0].within_budget());
  REQUIRE(bids[0].fallback_path.has_value());
  CHECK(bids[0].cost >= 10);
  CHECK(bids[0].cost == 19);
}

TEST_CASE("SA allocates singleton and dominance instances") {
  {
    std::vector<std::vector<Bid>> bids{{synthetic_bid(0, 0, 5.0, 3, true)}};
    const Assignment a = allocate_sa(bids, 1);
    REQUIRE(a.entries.size() == 1);
    CHECK(a.entries[0].module_id == 0);
    CHECK(a.message_count == 2);
  }
  {
    // Module 1 strictly more informative on both spots: it takes s0, module 0
    // inherits s1.
    std::vector<std::vector<Bid>> bids{
        {synthetic_bid(0, 0, 1.0, 2, true), synthetic_bid(0, 1, 2.0, 2, true)},
        {synthetic_bid(1, 0, 9.0, 2, true), synthetic_bid(1, 1, 8.0, 2, true)}};
    const Assignment a = allocate_sa(bids, 1);
    CHECK(a.module_for(0) == 1);
    CHECK(a.module_for(1) == 0);
    CHECK(a.message_count == 4);
  }
}

TEST_CASE("SA ties fall to cost then to the seeded coin") {
  std::vector<std::vector<Bid>> bids{
      {synthetic_bid(0, 0, 5.0, 7, true)},
      {synthetic_bid(1, 0, 5.0, 3, true)},
      {synthetic_bid(2, 0, 5.0, 3, true)},
  };
  // Equal informativeness: module 0 is pruned by cost; 1 vs 2 resolved by the
  // seeded draw, and deterministically so.
  const Assignment a = allocate_sa(bids, 12345);
  CHECK(a.entries[0].module_id != 0);
  const Assignment b = allocate_sa(bids, 12345);
  CHECK(a.entries[0].module_id == b.entries[0].module_id);
}

TEST_CASE("SA uses min fallback cost when every bid is over budget") {
  std::vector<std::vector<Bid>> bids{
      {synthetic_bid(0, 0, 25.0, 60, false)},
      {synthetic_bid(1, 0, 2.0, 47, false)},
  };
  const Assignment a = allocate_sa(bids, 3);
  CHECK(a.entries[0].module_id == 1);  // cheapest, not most informative
  CHECK(!a.entries[0].within_budget);
}

TEST_CASE("SA matches a literal re-implementation on random instances") {
  std::mt19937_64 rng(29);
  for (int trial = 0; trial < 50; ++trial) {
    const int spots = 1 + static_cast<int>(uniform_index(rng, 3));
    const int modules = spots + static_cast<int>(uniform_index(rng, 3));
    const auto bids = random_bids(rng, modules, spots, 0.8);
    const std::uint64_t seed = derive_seed(7, "sa-oracle", trial);
    const Assignment got = allocate_sa(bids, seed);
    const std::vector<int> want = oracles::literal_sa_winners(bids, seed);
    REQUIRE(got.entries.size() == want.size());
    for (std::size_t j = 0; j < want.size(); ++j) CHECK(got.entries[j].module_id == want[j]);
  }
}

TEST_CASE("auction handles the singleton instance") {
  std::vector<std::vector<Bid>> bids{{synthetic_bid(0, 0, 5.0, 3, true)}};
  const Assignment a = allocate_auction(bids, 1e-3, 1);
  REQUIRE(a.entries.size() == 1);
  CHECK(a.entries[0].module_id == 0);
  CHECK(a.message_count >= 1);
}

TEST_CASE("auction rejects non-positive epsilon") {
  std::vector<std::vector<Bid>> bids{{synthetic_bid(0, 0, 5.0, 3, true)}};
  CHECK_THROWS_AS(allocate_auction(bids, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(allocate_auction(bids, -1.0, 1), std::invalid_argument);
}

TEST_CASE("auction finds the diagonal when it dominates") {
  std::vector<std::vector<Bid>> bids(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      bids[i].push_back(synthetic_bid(i, j, i == j ? 20.0 : 1.0, 2, true));
  const Assignment a = allocate_auction(bids, 1e-3, 1);
  for (int j = 0; j < 3; ++j) CHECK(a.module_for(j) == j);
}

TEST_CASE("auction total value is within n*epsilon of the optimum") {
  std::mt19937_64 rng(37);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 5;
    const auto bids = random_bids(rng, n, n, 1.0);
    std::vector<std::vector<double>> value(n, std::vector<double>(n));
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) value[i][j] = bids[i][j].informativeness;

    const double epsilon = 1e-3;
    const Assignment a = allocate_auction(bids, epsilon, trial);
    double total = 0.0;
    for (const auto& e : a.entries) total += e.informativeness;
    const double best = oracles::best_assignment_value(value);
    CHECK(total >= best - n * epsilon - 1e-9);
  }
}

TEST_CASE("both allocators return injective total assignments") {
  std::mt19937_64 rng(43);
  for (int trial = 0; trial < 30; ++trial) {
    const int spots = 1 + static_cast<int>(uniform_index(rng, 6));
    const int modules = spots + static_cast<int>(uniform_index(rng, 4));
    const auto bids = random_bids(rng, modules, spots, 0.7);
    for (const Assignment& a :
         {allocate_sa(bids, trial), allocate_auction(bids, 1e-3, trial)}) {
      CHECK(a.entries.size() == static_cast<std::size_t>(spots));
      CHECK(a.injective());
      for (int j = 0; j < spots; ++j) CHECK(a.entries[j].spot_id == j);
    }
  }
}

TEST_CASE("message accounting: SA exact, auction larger and growing") {
  std::mt19937_64 rng(47);
  long previous_auction = 0;
  for (int n : {2, 5, 10}) {
    const auto bids = random_bids(rng, n, n, 0.9);
    const Assignment sa = allocate_sa(bids, 1);
    CHECK(sa.message_count == 2L * n);
    const Assignment auction = allocate_auction(bids, 1e-3, 1);
    CHECK(auction.message_count > sa.message_count);
    CHECK(auction.message_count > previous_auction);
    previous_auction = auction.message_count;
  }
}

TEST_CASE("allocators are deterministic for a fixed seed") {
  std::mt19937_64 rng(53);
  const auto bids = random_bids(rng, 6, 6, 0.8);
  const Assignment a1 = allocate_sa(bids, 99);
  const Assignment a2 = allocate_sa(bids, 99);
  const Assignment b1 = allocate_auction(bids, 1e-3, 99);
  const Assignment b2 = allocate_auction(bids, 1e-3, 99);
  for (int j = 0; j < 6; ++j) {
    CHECK(a1.module_for(j) == a2.module_for(j));
    CHECK(b1.module_for(j) == b2.module_for(j));
  }
  CHECK(b1.message_count == b2.message_count);
}

TEST_CASE("allocate rejects more spots than modules") {
  std::mt19937_64 rng(59);
  const auto bids = random_bids(rng, 2, 3);
  CHECK_THROWS_AS(allocate_sa(bids, 1), std::invalid_argument);
  CHECK_THROWS_AS(allocate_auction(bids, 1e-3, 1), std::invalid_argument);
}

TEST_CASE("assignment CSV carries the documented header") {
  std::vector<std::vector<Bid>> bids{{synthetic_bid(0, 0, 5.0, 3, true)}};
  const Assignment a = allocate_sa(bids, 1);
  const std::string csv = assignment_csv(a, "sa");
  CHECK(csv.rfind("spot_id,module_id,cost,informativeness,allocator,messages\n", 0) == 0);
  CHECK(csv.find(",sa,") != std::string::npos);
}
