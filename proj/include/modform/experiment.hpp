#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "modform/acting_sim.hpp"
#include "modform/allocation.hpp"
#include "modform/config_graph.hpp"

namespace modform {

enum class AllocatorChoice { Sa, Auction, Both };

std::string allocator_name(AllocatorChoice a);
AllocatorChoice parse_allocator(const std::string& name);  // throws on unknown

struct ExperimentConfig {
  std::uint64_t seed = 1;
  int width = 30;
  int height = 30;
  double field_low = 1.0;
  double field_high = 10.0;
  int modules = 10;
  int spots = 10;
  int budget = 45;
  int replan_interval = 0;  // 0 = budget / 2, resolved at run time
  AllocatorChoice allocator = AllocatorChoice::Sa;
  int reps = 5;
  double training_fraction = 0.4;
  double auction_epsilon = 1e-3;
  std::string out_dir = "out";

  int resolved_replan_interval() const;
  void validate() const;  // throws on invariant violations
  std::string echo_text() const;
};

// Flat key=value text, '#' comments and blank lines ignored.
ExperimentConfig parse_config_file(const std::string& path);
void apply_config_line(ExperimentConfig& config, const std::string& key, const std::string& value);

// Deterministic per-(rep, allocator) metrics. Wall-clock durations are kept
// out of the CSV so output files are a pure function of the config; they are
// reported on stdout instead.
struct RunMetrics {
  int rep = 0;
  std::string allocator;
  std::uint64_t rep_seed = 0;
  int modules = 0;
  int spots = 0;
  int budget = 0;
  int replan_interval = 0;
  long planning_messages = 0;  // allocator messages (bid lists + broadcasts)
  long position_messages = 0;  // initial pairwise position broadcasts
  long acting_messages = 0;    // REACHED broadcasts
  double estimated_informativeness = 0.0;
  double collected_information = 0.0;
  long eps_calls_planning = 0;
  long eps_expansions_planning = 0;
  long acting_steps = 0;
  int replans_accepted = 0;
  int replans_rejected = 0;
  int blocked_replans = 0;
  int max_realized_cost = 0;
  bool no_hole = false;
  bool injective = false;
  bool budget_respected = false;
  double planning_wall_ms = 0.0;  // stdout only
  double acting_wall_ms = 0.0;    // stdout only

  bool ok() const { return no_hole && injective && budget_respected; }
};

std::string metrics_csv_header();
std::string metrics_csv_row(const RunMetrics& m);

// Planning-phase products for one repetition, reusable across allocators.
struct PlanningStage {
  GridMap map;
  GpState gp;
  TargetConfig config;
  std::vector<Cell> starts;  // by module id
  std::vector<std::vector<Bid>> bids;
  long eps_calls = 0;
  long eps_expansions = 0;
  double wall_ms = 0.0;
};

// Field generation, seeded training sample, ML fit, bid computation.
PlanningStage run_planning(const ExperimentConfig& config, std::uint64_t rep_seed);

// One repetition end to end with one allocator. When `trace_out` is non-null
// the acting trace is stored there.
RunMetrics run_single(const ExperimentConfig& config, const PlanningStage& planning,
                      AllocatorChoice allocator, std::uint64_t rep_seed, int rep,
                      std::vector<TraceEvent>* trace_out = nullptr,
                      std::vector<double>* final_entropy_out = nullptr);

// Full pipeline for `reps` repetitions; writes metrics.csv, per-run traces,
// per-run entropy heatmaps and config-echo.txt under config.out_dir.
// Returns all metric rows; `ok` is false if any invariant failed.
struct ExperimentResult {
  std::vector<RunMetrics> rows;
  bool ok = true;
};
ExperimentResult run_experiment(const ExperimentConfig& config);

struct BudgetSweepRow {
  int budget = 0;
  double mean_expansions = 0.0;
  double mean_wall_ms = 0.0;  // stdout only
  int runs = 0;
};

struct BudgetSweepResult {
  std::vector<BudgetSweepRow> rows;  // in given budget order
  bool expansions_non_decreasing = false;
  Cell start;
  Cell goal;
};

// Fixed start/goal search cost as the budget varies; `seeds` independent
// fields/belief states per budget. When `expansion_trace_dir` is set, the
// first seed's search per budget also writes eps-expansions-b<B>.jsonl there
// (one record per expanded node: cell, g, hu) for explored-cell plots.
BudgetSweepResult sweep_budget(const ExperimentConfig& config, const std::vector<int>& budgets,
                               int seeds, std::optional<Cell> start = std::nullopt,
                               std::optional<Cell> goal = std::nullopt,
                               const std::string* expansion_trace_dir = nullptr);

struct AllocatorComparisonRow {
  int n = 0;  // modules = spots
  int rep = 0;
  std::uint64_t rep_seed = 0;
  double info_sa = 0.0;
  double info_auction = 0.0;
  long messages_sa = 0;
  long messages_auction = 0;
  double wall_sa_ms = 0.0;       // stdout only
  double wall_auction_ms = 0.0;  // stdout only
};

struct AllocatorComparisonResult {
  std::vector<AllocatorComparisonRow> rows;
  bool info_within_15_percent = false;
  bool auction_messages_greater = false;
};

// Planning-only SA vs auction comparison at each size in `sizes`.
AllocatorComparisonResult compare_allocators(const ExperimentConfig& config,
                                             const std::vector<int>& sizes);

struct ReplanSweepRow {
  int interval = 0;
  double mean_collected = 0.0;
  double mean_replans = 0.0;
  int max_replans_per_run = 0;
  double mean_wall_ms = 0.0;  // stdout only
  int runs = 0;
};

struct ReplanSweepResult {
  std::vector<ReplanSweepRow> rows;  // in given interval order
  bool collected_non_increasing_in_interval = false;
  bool replan_counts_within_bound = false;
};

// Single-module runs per replan interval over `seeds` seeds: one module on a
// fixed budget-relevant route (same start/goal defaults as sweep_budget),
// with an independent field and belief per seed.
ReplanSweepResult sweep_replan(const ExperimentConfig& config, const std::vector<int>& intervals,
                               int seeds, std::optional<Cell> start = std::nullopt,
                               std::optional<Cell> goal = std::nullopt);

// ASCII rendering of a stored trace: 'o' visited cells, '*' final cells.
std::string render_trace(const std::string& jsonl, int width, int height);

void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace modform
