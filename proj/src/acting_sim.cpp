#include "modform/acting_sim.hpp"

#include <algorithm>
#include <stdexcept>

#include <json.hpp>

namespace modform {

namespace {

CellSet blocked_by_others(const SimWorld& world, int active_index) {
  CellSet blocked(world.map.width(), world.map.height());
  for (int i = 0; i < static_cast<int>(world.modules.size()); ++i) {
    if (i == active_index) continue;
    blocked.insert(world.modules[i].current);
  }
  return blocked;
}

void record(SimWorld& world, int module_id, Cell cell, double collected, int b_remaining,
            const char* event) {
  world.trace.push_back(TraceEvent{world.t++, module_id, cell, collected, b_remaining, event});
}

}  // namespace

std::string trace_jsonl(const std::vector<TraceEvent>& trace) {
  std::string out;
  for (const TraceEvent& e : trace) {
    nlohmann::json j;
    j["t"] = e.t;
    j["module"] = e.module;
    j["cell"] = {e.cell.x, e.cell.y};
    j["entropy_collected"] = e.entropy_collected;
    j["b_remaining"] = e.b_remaining;
    j["event"] = e.event;
    out += j.dump();
    out += '\n';
  }
  return out;
}

const ModuleState& SimWorld::module_for_spot(int spot_id) const {
  for (const ModuleState& m : modules)
    if (m.spot_id == spot_id) return m;
  throw std::out_of_range("SimWorld: no module for spot " + std::to_string(spot_id));
}

SimWorld make_world(GridMap map, GpState gp, TargetConfig config, Assignment assignment,
                    std::vector<int> order, const std::vector<Cell>& starts, int budget,
                    int replan_interval) {
  if (replan_interval < 1) throw std::invalid_argument("make_world: replan_interval must be >= 1");
  if (!assignment.injective()) throw std::invalid_argument("make_world: assignment not injective");

  SimWorld world;
  world.map = std::move(map);
  world.gp = std::move(gp);
  world.config = std::move(config);
  world.assignment = std::move(assignment);
  world.order = std::move(order);
  world.budget = budget;
  world.replan_interval = replan_interval;

  world.modules.reserve(world.order.size());
  for (int spot_id : world.order) {
    const SpotAllocation& alloc = world.assignment.for_spot(spot_id);
    if (!alloc.plan)
      throw std::invalid_argument("make_world: spot " + std::to_string(spot_id) +
                                  " has no path for module " + std::to_string(alloc.module_id));
    ModuleState m;
    m.id = alloc.module_id;
    m.current = starts.at(alloc.module_id);
    m.spot_id = spot_id;
    m.remaining = alloc.plan->cells;
    if (m.remaining.empty() || m.remaining.front() != m.current)
      throw std::invalid_argument("make_world: plan does not start at the module's cell");
    m.budget_remaining = budget;
    m.visited.push_back(m.current);
    world.modules.push_back(std::move(m));
  }
  return world;
}

void step(SimWorld& world) {
  if (world.done()) throw std::logic_error("step: acting phase already complete");

  const int active_index = world.order_pos;
  ModuleState& m = world.modules[active_index];
  if (m.status == ModuleStatus::Waiting) m.status = ModuleStatus::Moving;

  const Cell goal = world.config.cell_of(m.spot_id);
  const CellSet blocked = blocked_by_others(world, active_index);
  if (blocked.contains(goal)) throw BlockedArrivalError(m.id, m.current);

  // Settled modules may sit on a path planned before they arrived.
  if (m.remaining.size() < 2 || blocked.contains(m.remaining[1])) {
    const EntropyField entropy(world.gp, world.map);
    auto detour = eps_search(m.current, goal, m.budget_remaining, entropy, world.map, blocked);
    if (!detour) detour = shortest_path(m.current, goal, world.map, blocked, entropy);
    if (!detour) throw BlockedArrivalError(m.id, m.current);
    m.remaining = detour->cells;
    ++world.blocked_replans;
  }

  const Cell next = m.remaining[1];
  m.remaining.erase(m.remaining.begin());
  m.current = next;
  m.visited.push_back(next);
  --m.budget_remaining;
  ++m.cells_since_replan;
  ++world.steps;

  // Only newly observed cells carry information; the increment is the
  // conditional entropy at visit time, floored at zero.
  double collected = 0.0;
  if (!world.gp.is_observed(next)) {
    collected = std::max(0.0, world.gp.cell_entropy(next));
    world.gp.observe(next, world.map.value(next));
  }
  world.collected_information += collected;

  if (next == goal) {
    m.status = ModuleStatus::Reached;
    world.message_count += static_cast<long>(world.modules.size()) - 1;  // REACHED broadcast
    record(world, m.id, next, collected, m.budget_remaining, "reached");
    ++world.order_pos;
    return;
  }

  record(world, m.id, next, collected, m.budget_remaining, "move");

  if (m.cells_since_replan >= world.replan_interval) {
    const EntropyField entropy(world.gp, world.map);
    const auto candidate =
        eps_search(m.current, goal, m.budget_remaining, entropy, world.map, blocked);
    const double remaining_info = path_informativeness(m.remaining, entropy);
    if (candidate && candidate->informativeness > remaining_info &&
        candidate->cost <= m.budget_remaining) {
      m.remaining = candidate->cells;
      ++world.replans_accepted;
      record(world, m.id, m.current, 0.0, m.budget_remaining, "replan_accept");
    } else {
      ++world.replans_rejected;
      record(world, m.id, m.current, 0.0, m.budget_remaining, "replan_reject");
    }
    m.cells_since_replan = 0;
  }
}

ActingReport run_acting(SimWorld& world) {
  const long cap = static_cast<long>(world.modules.size()) * world.map.cell_count();
  while (!world.done()) {
    if (world.steps >= cap)
      throw std::runtime_error("run_acting: step cap exceeded (livelock?)");
    step(world);
  }

  ActingReport report;
  report.outcomes.reserve(world.modules.size());
  for (const ModuleState& m : world.modules) {
    ModuleOutcome o;
    o.module_id = m.id;
    o.spot_id = m.spot_id;
    o.path_taken = m.visited;
    o.realized_cost = static_cast<int>(m.visited.size()) - 1;
    report.outcomes.push_back(std::move(o));
  }
  report.collected_information = world.collected_information;
  report.messages = world.message_count;
  report.steps = world.steps;
  report.replans_accepted = world.replans_accepted;
  report.replans_rejected = world.replans_rejected;
  report.blocked_replans = world.blocked_replans;
  return report;
}

bool check_no_hole(const SimWorld& world, const TargetConfig& config) {
  for (const Spot& s : config.spots()) {
    bool occupied = false;
    for (const ModuleState& m : world.modules) {
      if (m.current == s.pose.cell) {
        occupied = m.spot_id == s.id && m.status == ModuleStatus::Reached &&
                   world.assignment.module_for(s.id) == m.id;
        break;
      }
    }
    if (!occupied) return false;
  }
  return true;
}

}  // namespace modform
