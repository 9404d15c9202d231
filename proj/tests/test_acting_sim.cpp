#include <doctest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "modform/acting_sim.hpp"
#include "modform/experiment.hpp"
#include "modform/rng.hpp"

using namespace modform;

namespace {

GpState open_state() { return GpState(GpHyperparams{2.0, 4.0, 0.1, 5.0}); }

// Minimal world: one module one cell away from its single spot.
SimWorld adjacent_world() {
  GridMap map = generate_field(2, 8, 8, 1.0, 10.0);
  GpState gp = open_state();
  TargetConfig config({Spot{0, Pose{{4, 4}, Heading::East}, {}}}, {});
  const EntropyField entropy(gp, map);
  CellSet starts(8, 8);
  starts.insert({3, 4});
  std::vector<std::vector<Bid>> bids{
      compute_bids(0, {3, 4}, config, 20, entropy, map, starts)};
  Assignment assignment = allocate_sa(bids, 1);
  return make_world(std::move(map), std::move(gp), std::move(config), std::move(assignment), {0},
                    {{3, 4}}, 20, 10);
}

// Full small pipeline world, reusing the experiment plumbing.
SimWorld pipeline_world(std::uint64_t seed, int n, int budget, int interval,
                        ExperimentConfig* config_out = nullptr) {
  ExperimentConfig config;
  config.seed = seed;
  config.modules = n;
  config.spots = n;
  config.budget = budget;
  config.replan_interval = interval;
  config.validate();
  if (config_out) *config_out = config;

  const std::uint64_t rep_seed = derive_seed(seed, "rep", 0);
  const PlanningStage planning = run_planning(config, rep_seed);
  Assignment assignment = allocate_sa(planning.bids, derive_seed(rep_seed, "alloc-sa"));
  const std::vector<int> order = acting_order(planning.config, derive_seed(rep_seed, "order"));
  return make_world(planning.map, planning.gp, planning.config, std::move(assignment), order,
                    planning.starts, budget, config.resolved_replan_interval());
}

}  // namespace

TEST_CASE("single adjacent module reaches in one step") {
  SimWorld world = adjacent_world();
  step(world);
  CHECK(world.done());
  CHECK(world.modules[0].status == ModuleStatus::Reached);
  CHECK(world.modules[0].current == Cell{4, 4});
  CHECK(world.steps == 1);
  CHECK(world.message_count == 0);  // |modules| - 1 = 0 broadcast receivers
  CHECK(check_no_hole(world, world.config));
  REQUIRE(world.trace.size() == 1);
  CHECK(world.trace[0].event == "reached");
}

TEST_CASE("replan disabled when the interval equals the budget") {
  SimWorld world = pipeline_world(5, 1, 45, 45);
  const std::vector<Cell> planned = world.modules[0].remaining;
  const ActingReport report = run_acting(world);
  CHECK(report.replans_accepted + report.replans_rejected == 0);
  if (report.blocked_replans == 0) {
    CHECK(world.modules[0].visited == planned);
  }
  CHECK(check_no_hole(world, world.config));
}

TEST_CASE("replan count respects the ceil(budget/interval) bound") {
  for (std::uint64_t seed : {1ULL, 2ULL, 3ULL}) {
    for (int interval : {4, 9, 22}) {
      SimWorld world = pipeline_world(seed, 1, 45, interval);
      const ActingReport report = run_acting(world);
      const int bound = static_cast<int>(std::ceil(45.0 / interval));
      CHECK(report.replans_accepted + report.replans_rejected <= bound);
      CHECK(report.outcomes[0].realized_cost <= 45);
    }
  }
}

TEST_CASE("movement is sequential and arrival order follows the acting order") {
  SimWorld world = pipeline_world(11, 6, 45, 22);
  const std::vector<int> order = world.order;
  const ActingReport report = run_acting(world);
  CHECK(check_no_hole(world, world.config));

  // Once a module stops appearing in the trace it never moves again, and
  // REACHED events appear exactly in acting order.
  std::map<int, int> spot_of_module;
  for (const ModuleState& m : world.modules) spot_of_module[m.id] = m.spot_id;
  std::vector<int> reached_spots;
  std::map<int, long> last_event_t;
  std::map<int, long> first_event_t;
  for (const TraceEvent& e : world.trace) {
    if (!first_event_t.contains(e.module)) first_event_t[e.module] = e.t;
    last_event_t[e.module] = e.t;
    if (e.event == "reached") reached_spots.push_back(spot_of_module.at(e.module));
  }
  (void)report;
  REQUIRE(reached_spots.size() == order.size());
  CHECK(reached_spots == order);

  // Intervals [first, last] per module must not overlap (sequential motion).
  std::vector<std::pair<long, long>> spans;
  for (const auto& [module, t0] : first_event_t) spans.emplace_back(t0, last_event_t[module]);
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) CHECK(spans[i].first > spans[i - 1].second);
}

TEST_CASE("collected information is non-decreasing and matches the trace") {
  SimWorld world = pipeline_world(13, 4, 45, 10);
  const ActingReport report = run_acting(world);
  double running = 0.0;
  for (const TraceEvent& e : world.trace) {
    CHECK(e.entropy_collected >= 0.0);
    running += e.entropy_collected;
  }
  CHECK(running == doctest::Approx(report.collected_information).epsilon(1e-12));
}

TEST_CASE("every realized path cost stays within the budget") {
  for (std::uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    SimWorld world = pipeline_world(seed, 8, 45, 22);
    const ActingReport report = run_acting(world);
    for (const ModuleOutcome& o : report.outcomes) {
      CHECK(o.realized_cost <= 45);
      CHECK(o.path_taken.size() == static_cast<std::size_t>(o.realized_cost) + 1);
    }
    CHECK(check_no_hole(world, world.config));
  }
}

TEST_CASE("acting runs are deterministic byte for byte") {
  SimWorld a = pipeline_world(31, 5, 45, 15);
  SimWorld b = pipeline_world(31, 5, 45, 15);
  run_acting(a);
  run_acting(b);
  CHECK(trace_jsonl(a.trace) == trace_jsonl(b.trace));
  CHECK(!trace_jsonl(a.trace).empty());
}

TEST_CASE("check_no_hole detects a displaced module") {
  SimWorld world = adjacent_world();
  step(world);
  REQUIRE(check_no_hole(world, world.config));
  world.modules[0].current = Cell{0, 0};  // artificially undo the arrival
  CHECK(!check_no_hole(world, world.config));
}

TEST_CASE("step on a finished world throws") {
  SimWorld world = adjacent_world();
  step(world);
  CHECK_THROWS_AS(step(world), std::logic_error);
}

TEST_CASE("ten modules form the configuration across seeds") {
  for (std::uint64_t seed : {101ULL, 102ULL, 103ULL}) {
    SimWorld world = pipeline_world(seed, 10, 45, 22);
    const ActingReport report = run_acting(world);
    CHECK(check_no_hole(world, world.config));
    CHECK(report.messages == 10L * 9L);
    CHECK(report.steps < 10L * 900L);
  }
}

TEST_CASE("trace jsonl is one well-formed record per line") {
  SimWorld world = pipeline_world(41, 3, 45, 22);
  run_acting(world);
  const std::string jsonl = trace_jsonl(world.trace);
  std::istringstream in(jsonl);
  std::string line;
  long count = 0;
  while (std::getline(in, line)) {
    REQUIRE(!line.empty());
    CHECK(line.front() == '{');
    CHECK(line.find("\"t\":") != std::string::npos);
    CHECK(line.find("\"module\":") != std::string::npos);
    CHECK(line.find("\"cell\":") != std::string::npos);
    CHECK(line.find("\"entropy_collected\":") != std::string::npos);
    CHECK(line.find("\"b_remaining\":") != std::string::npos);
    CHECK(line.find("\"event\":") != std::string::npos);
    ++count;
  }
  CHECK(count == static_cast<long>(world.trace.size()));
}
