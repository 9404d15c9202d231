#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "modform/allocation.hpp"
#include "modform/config_graph.hpp"
#include "modform/gp_field.hpp"
#include "modform/grid_env.hpp"

namespace modform {

enum class ModuleStatus { Waiting, Moving, Reached };

struct ModuleState {
  int id = 0;
  Cell current;
  int spot_id = 0;
  std::vector<Cell> remaining;  // suffix of the plan, first element = current
  int budget_remaining = 0;
  std::vector<Cell> visited;  // includes the start cell
  int cells_since_replan = 0;
  ModuleStatus status = ModuleStatus::Waiting;
};

struct TraceEvent {
  long t = 0;
  int module = 0;
  Cell cell;
  double entropy_collected = 0.0;
  int b_remaining = 0;
  std::string event;  // move | replan_accept | replan_reject | reached
};

std::string trace_jsonl(const std::vector<TraceEvent>& trace);

// Raised when a module cannot reach its spot around settled/stationary
// modules; with a connected-prefix acting order this indicates a bug or a
// degenerate instance, so it surfaces as an error rather than a result.
class BlockedArrivalError : public std::runtime_error {
 public:
  BlockedArrivalError(int module_id, Cell at)
      : std::runtime_error("blocked arrival: module " + std::to_string(module_id) + " at (" +
                           std::to_string(at.x) + "," + std::to_string(at.y) + ")"),
        module_id(module_id),
        at(at) {}
  int module_id;
  Cell at;
};

// Sequential acting-phase world: exactly one module moves at a time, in the
// given spot order; the shared GP absorbs each visited cell.
struct SimWorld {
  GridMap map;
  GpState gp;
  TargetConfig config;
  Assignment assignment;
  std::vector<ModuleState> modules;  // aligned with `order`
  std::vector<int> order;            // spot ids in acting order
  int order_pos = 0;
  int budget = 0;
  int replan_interval = 0;  // cells visited between replans
  long t = 0;
  long steps = 0;
  double collected_information = 0.0;
  long message_count = 0;
  int replans_accepted = 0;
  int replans_rejected = 0;
  int blocked_replans = 0;
  std::vector<TraceEvent> trace;

  bool done() const { return order_pos >= static_cast<int>(order.size()); }
  ModuleState& active() { return modules.at(order_pos); }
  const ModuleState& module_for_spot(int spot_id) const;
};

// Assembles a world from planning results. `starts` maps module id to its
// initial cell. Throws if any allocated spot lacks a path.
SimWorld make_world(GridMap map, GpState gp, TargetConfig config, Assignment assignment,
                    std::vector<int> order, const std::vector<Cell>& starts, int budget,
                    int replan_interval);

// Advances the active module one cell: the cell is observed into the GP and
// its conditional entropy at visit time is collected; every replan_interval
// newly visited cells the module re-searches with its remaining budget and
// adopts the new path only if it is strictly more informative and affordable;
// reaching the spot broadcasts REACHED (|modules|-1 messages) and hands over
// to the next module in order.
void step(SimWorld& world);

struct ModuleOutcome {
  int module_id = 0;
  int spot_id = 0;
  std::vector<Cell> path_taken;
  int realized_cost = 0;
};

struct ActingReport {
  std::vector<ModuleOutcome> outcomes;
  double collected_information = 0.0;
  long messages = 0;
  long steps = 0;
  int replans_accepted = 0;
  int replans_rejected = 0;
  int blocked_replans = 0;
};

// Runs step() until every module has reached its spot. A hard cap of
// |modules| * (width * height) steps guards against livelock.
ActingReport run_acting(SimWorld& world);

// True iff every spot's cell is occupied by exactly the module assigned to it.
bool check_no_hole(const SimWorld& world, const TargetConfig& config);

}  // namespace modform
