#include "modform/allocation.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <deque>
#include <limits>
#include <stdexcept>

#include "modform/rng.hpp"

namespace modform {

namespace {

constexpr double kInfoTieTolerance = 1e-9;
constexpr int kUnreachableCost = std::numeric_limits<int>::max();

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

void check_bid_shape(const std::vector<std::vector<Bid>>& bids) {
  if (bids.empty()) throw std::invalid_argument("allocate: no modules");
  const std::size_t spots = bids.front().size();
  if (spots == 0) throw std::invalid_argument("allocate: no spots");
  for (const auto& row : bids)
    if (row.size() != spots) throw std::invalid_argument("allocate: ragged bid matrix");
  if (bids.size() < spots)
    throw std::invalid_argument("allocate: need at least as many modules as spots");
}

}  // namespace

const SpotAllocation& Assignment::for_spot(int spot_id) const {
  for (const SpotAllocation& e : entries)
    if (e.spot_id == spot_id) return e;
  throw std::out_of_range("Assignment: no entry for spot " + std::to_string(spot_id));
}

double Assignment::total_informativeness() const {
  double sum = 0.0;
  for (const SpotAllocation& e : entries) sum += e.informativeness;
  return sum;
}

bool Assignment::injective() const {
  std::vector<int> modules;
  for (const SpotAllocation& e : entries) modules.push_back(e.module_id);
  std::sort(modules.begin(), modules.end());
  return std::adjacent_find(modules.begin(), modules.end()) == modules.end();
}

std::vector<Bid> compute_bids(int module_id, Cell start, const TargetConfig& spots, int budget,
                              const EntropyField& entropy, const GridMap& map,
                              const CellSet& blocked, SearchStats* stats) {
  CellSet others = blocked;
  others.erase(start);

  std::vector<Bid> out;
  out.reserve(spots.size());
  for (const Spot& s : spots.spots()) {
    Bid bid;
    bid.module_id = module_id;
    bid.spot_id = s.id;
    const Cell goal = s.pose.cell;

    bid.path = eps_search(start, goal, budget, entropy, map, others, stats);
    if (bid.path) {
      bid.informativeness = bid.path->informativeness;
      bid.cost = bid.path->cost;
    } else {
      bid.fallback_path = shortest_path(start, goal, map, others, entropy);
      if (bid.fallback_path) {
        bid.informativeness = bid.fallback_path->informativeness;
        bid.cost = bid.fallback_path->cost;
      } else {
        bid.informativeness = -std::numeric_limits<double>::infinity();
        bid.cost = kUnreachableCost;
      }
    }
    out.push_back(std::move(bid));
  }
  return out;
}

Assignment allocate_sa(const std::vector<std::vector<Bid>>& bids, std::uint64_t seed) {
  check_bid_shape(bids);
  const auto t0 = Clock::now();
  const int modules = static_cast<int>(bids.size());
  const int spots = static_cast<int>(bids.front().size());
  std::mt19937_64 rng(seed);

  std::vector<char> taken(modules, 0);
  Assignment out;
  out.entries.reserve(spots);

  for (int j = 0; j < spots; ++j) {
    std::vector<int> candidates;  // winners so far, module indices
    // Within-budget round: max informativeness.
    double best_info = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < modules; ++i) {
      if (taken[i] || !bids[i][j].within_budget()) continue;
      if (bids[i][j].informativeness > best_info) best_info = bids[i][j].informativeness;
    }
    for (int i = 0; i < modules; ++i) {
      if (taken[i] || !bids[i][j].within_budget()) continue;
      if (bids[i][j].informativeness >= best_info - kInfoTieTolerance) candidates.push_back(i);
    }

    if (candidates.empty()) {
      // Every available module is over budget: cheapest fallback wins.
      int best_cost = kUnreachableCost;
      for (int i = 0; i < modules; ++i) {
        if (taken[i]) continue;
        best_cost = std::min(best_cost, bids[i][j].cost);
      }
      for (int i = 0; i < modules; ++i) {
        if (taken[i]) continue;
        if (bids[i][j].cost == best_cost) candidates.push_back(i);
      }
    } else if (candidates.size() > 1) {
      // Informativeness tie: min cost.
      int best_cost = kUnreachableCost;
      for (int i : candidates) best_cost = std::min(best_cost, bids[i][j].cost);
      std::erase_if(candidates, [&](int i) { return bids[i][j].cost != best_cost; });
    }

    // Remaining ties are broken at random.
    const int winner =
        candidates.size() == 1
            ? candidates.front()
            : candidates[uniform_index(rng, candidates.size())];
    taken[winner] = 1;

    const Bid& b = bids[winner][j];
    SpotAllocation alloc;
    alloc.spot_id = j;
    alloc.module_id = b.module_id;
    alloc.plan = b.within_budget() ? b.path : b.fallback_path;
    alloc.informativeness = b.informativeness;
    alloc.cost = b.cost;
    alloc.within_budget = b.within_budget();
    out.entries.push_back(std::move(alloc));
  }

  out.message_count = 2L * modules;  // bid list + allotment broadcast per module
  out.planning_wall_ms = elapsed_ms(t0);
  return out;
}

Assignment allocate_auction(const std::vector<std::vector<Bid>>& bids, double epsilon,
                            std::uint64_t seed) {
  check_bid_shape(bids);
  if (!(epsilon > 0.0)) throw std::invalid_argument("allocate_auction: epsilon must be > 0");
  const auto t0 = Clock::now();
  const int modules = static_cast<int>(bids.size());
  const int spots = static_cast<int>(bids.front().size());
  std::mt19937_64 rng(seed);

  // Over-budget bids get values strictly below every within-budget value so
  // they lose unless unavoidable, cheaper fallbacks preferred. The band is
  // kept bounded: an unbounded penalty makes the epsilon price war between
  // displaced within-budget bidders run to the cliff and never terminate.
  double lo = 0.0, hi = 0.0;
  int max_cost = 0;
  bool any_within = false;
  for (const auto& row : bids) {
    for (const Bid& b : row) {
      if (b.within_budget()) {
        lo = any_within ? std::min(lo, b.informativeness) : b.informativeness;
        hi = any_within ? std::max(hi, b.informativeness) : b.informativeness;
        any_within = true;
      } else if (b.fallback_path) {
        max_cost = std::max(max_cost, b.cost);
      }
    }
  }
  const double floor_value = lo - (hi - lo) - 1.0;
  auto value = [&](int i, int j) -> double {
    const Bid& b = bids[i][j];
    if (b.within_budget()) return b.informativeness;
    if (b.fallback_path) return floor_value - b.cost;
    return floor_value - max_cost - 1.0;
  };

  std::vector<double> price(spots, 0.0);
  std::vector<int> owner(spots, -1);
  std::vector<int> assigned(modules, -1);
  std::deque<int> queue;
  for (int i = 0; i < modules; ++i) queue.push_back(i);

  long messages = 0;
  int owned = 0;
  long iterations = 0;
  while (owned < spots) {
    if (++iterations > 50'000'000L)
      throw std::runtime_error("allocate_auction: iteration cap exceeded");
    int bidder = -1;
    while (!queue.empty()) {
      const int i = queue.front();
      queue.pop_front();
      if (assigned[i] < 0) {
        bidder = i;
        break;
      }
    }
    if (bidder < 0)
      throw std::runtime_error("allocate_auction: no unassigned bidder but spots remain");

    double best_v = -std::numeric_limits<double>::infinity();
    double second_v = -std::numeric_limits<double>::infinity();
    std::vector<int> best_spots;
    for (int j = 0; j < spots; ++j) {
      const double v = value(bidder, j) - price[j];
      if (v > best_v) {
        second_v = best_v;
        best_v = v;
        best_spots.assign(1, j);
      } else if (v == best_v) {
        best_spots.push_back(j);
      } else if (v > second_v) {
        second_v = v;
      }
    }
    if (best_spots.size() > 1) second_v = best_v;  // tied best is its own runner-up
    const int target = best_spots.size() == 1
                           ? best_spots.front()
                           : best_spots[uniform_index(rng, best_spots.size())];
    const double increment =
        (second_v == -std::numeric_limits<double>::infinity() ? epsilon
                                                              : best_v - second_v + epsilon);

    const int displaced = owner[target];
    if (displaced >= 0) {
      assigned[displaced] = -1;
      queue.push_back(displaced);
    } else {
      ++owned;
    }
    owner[target] = bidder;
    assigned[bidder] = target;
    price[target] += increment;

    messages += 1 + modules;  // the bid itself + price update broadcast
  }

  Assignment out;
  out.entries.reserve(spots);
  for (int j = 0; j < spots; ++j) {
    const Bid& b = bids[owner[j]][j];
    SpotAllocation alloc;
    alloc.spot_id = j;
    alloc.module_id = b.module_id;
    alloc.plan = b.within_budget() ? b.path : b.fallback_path;
    alloc.informativeness = b.informativeness;
    alloc.cost = b.cost;
    alloc.within_budget = b.within_budget();
    out.entries.push_back(std::move(alloc));
  }
  out.message_count = messages;
  out.planning_wall_ms = elapsed_ms(t0);
  return out;
}

std::string assignment_csv(const Assignment& assignment, const std::string& allocator) {
  std::string out = "spot_id,module_id,cost,informativeness,allocator,messages\n";
  char buf[160];
  for (const SpotAllocation& e : assignment.entries) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.12g,%s,%ld\n", e.spot_id, e.module_id, e.cost,
                  e.informativeness, allocator.c_str(), assignment.message_count);
    out += buf;
  }
  return out;
}

}  // namespace modform
