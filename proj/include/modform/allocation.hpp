#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "modform/config_graph.hpp"
#include "modform/eps_planner.hpp"

namespace modform {

// One module's offer for one spot. `path` is the budget-limited informative
// path when one exists; otherwise `fallback_path` carries the shortest path
// (over budget). informativeness/cost mirror whichever path is present; an
// unreachable spot leaves both empty with infinite cost.
struct Bid {
  int module_id = 0;
  int spot_id = 0;
  std::optional<PathPlan> path;
  std::optional<PathPlan> fallback_path;
  double informativeness = 0.0;
  int cost = 0;

  bool within_budget() const { return path.has_value(); }
  bool reachable() const { return path.has_value() || fallback_path.has_value(); }
};

struct SpotAllocation {
  int spot_id = 0;
  int module_id = 0;
  std::optional<PathPlan> plan;
  double informativeness = 0.0;
  int cost = 0;
  bool within_budget = false;
};

struct Assignment {
  std::vector<SpotAllocation> entries;  // ordered by spot id
  long message_count = 0;
  double planning_wall_ms = 0.0;

  const SpotAllocation& for_spot(int spot_id) const;
  int module_for(int spot_id) const { return for_spot(spot_id).module_id; }
  // Sum of informativeness of the chosen plans.
  double total_informativeness() const;
  bool injective() const;
};

// One bid per spot (spot-id order) from a module standing at `start`:
// the budget-limited informative path when the search finds one, else the
// shortest path annotated as over budget. `blocked` is the footnote-style
// obstacle overlay (all module start cells); the module's own start is
// lifted internally.
std::vector<Bid> compute_bids(int module_id, Cell start, const TargetConfig& spots, int budget,
                              const EntropyField& entropy, const GridMap& map,
                              const CellSet& blocked, SearchStats* stats = nullptr);

// Supervisor's sequential spot allocation: rounds over spots in index order;
// each round the unallocated module with the most informative within-budget
// bid wins (informativeness ties -> min cost -> seeded random); if no
// within-budget bid exists the module with the cheapest fallback wins.
// Message accounting: one bid-list message plus one allotment broadcast per
// module, i.e. exactly 2 * |modules|.
Assignment allocate_sa(const std::vector<std::vector<Bid>>& bids, std::uint64_t seed);

// Epsilon-auction baseline: modules bid best-minus-second-best-plus-epsilon
// on their best-value spot, prices rise until every spot is owned. Values are
// bid informativeness; over-budget bids get a large negative value (minus
// cost, so forced assignments still prefer cheap paths). Message accounting:
// one message per bid submission plus a |modules|-message price broadcast per
// round.
Assignment allocate_auction(const std::vector<std::vector<Bid>>& bids, double epsilon,
                            std::uint64_t seed);

// CSV with header: spot_id,module_id,cost,informativeness,allocator,messages
std::string assignment_csv(const Assignment& assignment, const std::string& allocator);

}  // namespace modform
