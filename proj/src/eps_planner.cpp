#include "modform/eps_planner.hpp"

#include <algorithm>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace modform {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEntropyClamp = -1e12;

enum class NodeState : std::uint8_t { Unseen = 0, Open = 1, Closed = 2 };

struct NodeRec {
  int g = 0;
  int parent = -1;  // cell index
  double hu = 0.0;
  std::uint32_t seq = 0;
  NodeState state = NodeState::Unseen;
};

void check_endpoints(Cell start, Cell goal, const GridMap& map, const CellSet& blocked) {
  if (!map.contains(start) || !map.contains(goal))
    throw std::invalid_argument("search: start/goal outside the map");
  if (start == goal) throw std::invalid_argument("search: start must differ from goal");
  if (map.is_obstacle(start) || map.is_obstacle(goal))
    throw std::invalid_argument("search: start/goal on an obstacle");
  if (blocked.contains(goal)) throw std::invalid_argument("search: goal is blocked");
}

std::vector<Cell> reconstruct(const std::vector<NodeRec>& nodes, const GridMap& map,
                              int tail_index, Cell last) {
  std::vector<Cell> cells;
  for (int i = tail_index; i != -1; i = nodes[i].parent) cells.push_back(map.cell_at(i));
  std::reverse(cells.begin(), cells.end());
  cells.push_back(last);
  return cells;
}

}  // namespace

double path_informativeness(std::span<const Cell> cells, const EntropyField& entropy) {
  double sum = 0.0;
  for (Cell c : cells) sum += std::max(entropy.at(c), kEntropyClamp);
  return sum;
}

double potential(int budget, int g, int h) {
  if (h == 0) return kInf;
  return static_cast<double>(budget - g) / h;
}

double entropic_potential(int budget, int g, int h, double entropy) {
  return potential(budget, g, h) + entropy;
}

std::optional<PathPlan> eps_search(Cell start, Cell goal, int budget,
                                   const EntropyField& entropy, const GridMap& map,
                                   const CellSet& blocked, SearchStats* stats,
                                   std::vector<ExpansionRecord>* trace) {
  check_endpoints(start, goal, map, blocked);

  std::vector<NodeRec> nodes(map.cell_count());
  std::uint32_t next_seq = 0;

  {
    NodeRec& s = nodes[map.index(start)];
    s.g = 0;
    s.state = NodeState::Open;
    s.hu = entropic_potential(budget, 0, manhattan_distance(start, goal), entropy.at(start));
    s.seq = next_seq++;
  }
  int open_count = 1;

  while (open_count > 0) {
    // argmax hu; ties: larger g, then earlier insertion.
    int best = -1;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      const NodeRec& n = nodes[i];
      if (n.state != NodeState::Open) continue;
      if (best == -1) {
        best = i;
        continue;
      }
      const NodeRec& b = nodes[best];
      if (n.hu > b.hu || (n.hu == b.hu && (n.g > b.g || (n.g == b.g && n.seq < b.seq)))) best = i;
    }

    NodeRec& nmax = nodes[best];
    nmax.state = NodeState::Closed;
    --open_count;
    const Cell cmax = map.cell_at(best);
    if (stats) ++stats->expansions;
    if (trace) trace->push_back(ExpansionRecord{cmax, nmax.g, nmax.hu});

    for (Cell nb : neighbors4(cmax, map, blocked)) {
      const int ni = static_cast<int>(map.index(nb));
      NodeRec& rec = nodes[ni];
      const int ng = nmax.g + 1;
      if (rec.state != NodeState::Unseen && rec.g <= ng) continue;
      if (ng + manhattan_distance(nb, goal) >= budget) continue;
      if (nb == goal) {
        if (stats) ++stats->generated;
        PathPlan plan;
        plan.cells = reconstruct(nodes, map, best, goal);
        plan.cost = ng;
        plan.informativeness = path_informativeness(plan.cells, entropy);
        plan.budget_used_against = budget;
        return plan;
      }
      const int h = manhattan_distance(nb, goal);
      if (rec.state == NodeState::Open) {
        rec.g = ng;
        rec.parent = best;
        rec.hu = entropic_potential(budget, ng, h, entropy.at(nb));
      } else if (rec.state == NodeState::Closed) {
        // Re-open on strictly better g.
        rec.state = NodeState::Open;
        ++open_count;
        rec.g = ng;
        rec.parent = best;
        rec.hu = entropic_potential(budget, ng, h, entropy.at(nb));
        rec.seq = next_seq++;
      } else if (entropy.at(nb) > 0.0) {
        rec.state = NodeState::Open;
        ++open_count;
        rec.g = ng;
        rec.parent = best;
        rec.hu = entropic_potential(budget, ng, h, entropy.at(nb));
        rec.seq = next_seq++;
        if (stats) ++stats->generated;
      }
    }
  }
  return std::nullopt;
}

std::optional<PathPlan> shortest_path(Cell start, Cell goal, const GridMap& map,
                                      const CellSet& blocked, const EntropyField& entropy) {
  check_endpoints(start, goal, map, blocked);

  std::vector<NodeRec> nodes(map.cell_count());
  std::uint32_t next_seq = 0;
  {
    NodeRec& s = nodes[map.index(start)];
    s.g = 0;
    s.state = NodeState::Open;
    s.hu = manhattan_distance(start, goal);  // f value
    s.seq = next_seq++;
  }
  int open_count = 1;

  while (open_count > 0) {
    // argmin f; ties by insertion sequence.
    int best = -1;
    for (int i = 0; i < static_cast<int>(nodes.size()); ++i) {
      const NodeRec& n = nodes[i];
      if (n.state != NodeState::Open) continue;
      if (best == -1 || n.hu < nodes[best].hu ||
          (n.hu == nodes[best].hu && n.seq < nodes[best].seq))
        best = i;
    }

    NodeRec& nmax = nodes[best];
    const Cell cmax = map.cell_at(best);
    if (cmax == goal) {
      PathPlan plan;
      plan.cells = reconstruct(nodes, map, nmax.parent, goal);
      plan.cost = nmax.g;
      plan.informativeness = path_informativeness(plan.cells, entropy);
      return plan;
    }
    nmax.state = NodeState::Closed;
    --open_count;

    for (Cell nb : neighbors4(cmax, map, blocked)) {
      const int ni = static_cast<int>(map.index(nb));
      NodeRec& rec = nodes[ni];
      const int ng = nmax.g + 1;
      if (rec.state != NodeState::Unseen && rec.g <= ng) continue;
      if (rec.state == NodeState::Closed) ++open_count;
      if (rec.state == NodeState::Unseen) {
        rec.seq = next_seq++;
        ++open_count;
      }
      rec.state = NodeState::Open;
      rec.g = ng;
      rec.parent = best;
      rec.hu = ng + manhattan_distance(nb, goal);
    }
  }
  return std::nullopt;
}

}  // namespace modform
