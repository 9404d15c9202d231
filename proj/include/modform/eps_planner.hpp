#pragma once

#include <optional>
#include <span>
#include <vector>

#include "modform/gp_field.hpp"
#include "modform/grid_env.hpp"

namespace modform {

struct PathPlan {
  std::vector<Cell> cells;        // first = start, last = goal
  int cost = 0;                   // |cells| - 1
  double informativeness = 0.0;   // sum of per-cell conditional entropies
  int budget_used_against = -1;   // -1 when not planned under a budget

  friend bool operator==(const PathPlan&, const PathPlan&) = default;
};

// Sum of conditional entropies along the cells, with -infinity sentinels
// clamped to -1e12 so sums stay comparable.
double path_informativeness(std::span<const Cell> cells, const EntropyField& entropy);

// Bounded-cost search potential (budget - g) / h; +infinity at the goal
// (h = 0) so the goal always wins comparisons.
double potential(int budget, int g, int h);

// potential + conditional entropy; the greedy key of the search.
double entropic_potential(int budget, int g, int h, double entropy);

struct SearchStats {
  int expansions = 0;  // nodes popped from OPEN
  int generated = 0;   // nodes inserted into OPEN (plus the terminating goal)
};

struct ExpansionRecord {
  Cell cell;
  int g = 0;
  double hu = 0.0;
};

// Greedy best-first informative path search, budget-pruned (g + h >= budget
// rejects), entropy-gated (non-goal nodes need positive conditional entropy
// to enter OPEN), terminating as soon as the goal is generated. Returns
// nullopt when OPEN empties, i.e. no admissible path of cost < budget was
// found. The entropy field is the frozen planning-time belief.
std::optional<PathPlan> eps_search(Cell start, Cell goal, int budget,
                                   const EntropyField& entropy, const GridMap& map,
                                   const CellSet& blocked, SearchStats* stats = nullptr,
                                   std::vector<ExpansionRecord>* trace = nullptr);

// Optimal-cost 4-connected path (A* with the Manhattan heuristic), used as
// the over-budget fallback. Informativeness is annotated from the same
// frozen entropy field; no budget applies.
std::optional<PathPlan> shortest_path(Cell start, Cell goal, const GridMap& map,
                                      const CellSet& blocked, const EntropyField& entropy);

}  // namespace modform
