// Command-line front end: reproduces the experiment suite (single runs,
// budget sweeps, allocator comparison, replan-interval sweeps) and renders
// stored traces. All file outputs are a pure function of the seed/config;
// wall-clock timings are printed to stdout only.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "modform/experiment.hpp"

namespace {

using namespace modform;

void add_common_flags(CLI::App* cmd, ExperimentConfig& config, std::string& config_path) {
  cmd->add_option("--config", config_path, "key=value config file (flags override it)");
  cmd->add_option("--seed", config.seed, "master seed");
  cmd->add_option("--out", config.out_dir, "output directory");
  cmd->add_option("--reps", config.reps, "repetitions");
  cmd->add_option("--budget", config.budget, "path budget B (max path cost)");
  cmd->add_option("--replan-interval", config.replan_interval,
                  "cells between replans (0 = budget/2)");
  cmd->add_option("--modules", config.modules, "number of modules");
  cmd->add_option("--spots", config.spots, "number of spots in the target configuration");
  cmd->add_option("--width", config.width, "grid width");
  cmd->add_option("--height", config.height, "grid height");
  cmd->add_option(
      "--allocator",
      [&config](const std::vector<std::string>& vals) {
        config.allocator = parse_allocator(vals.front());
        return true;
      },
      "spot allocator: sa | auction | both");
}

int cmd_run(const ExperimentConfig& config) {
  config.validate();
  const ExperimentResult result = run_experiment(config);
  double planning_ms = 0.0, acting_ms = 0.0;
  for (const RunMetrics& m : result.rows) {
    planning_ms += m.planning_wall_ms;
    acting_ms += m.acting_wall_ms;
    std::printf("run %d (%s): est_info=%.4f collected=%.4f messages=%ld no_hole=%d\n", m.rep,
                m.allocator.c_str(), m.estimated_informativeness, m.collected_information,
                m.planning_messages + m.position_messages + m.acting_messages,
                m.no_hole ? 1 : 0);
  }
  std::printf("wrote %zu metric rows to %s (planning %.1f ms, acting %.1f ms total)\n",
              result.rows.size(), (std::filesystem::path(config.out_dir) / "metrics.csv").c_str(),
              planning_ms, acting_ms);
  if (!result.ok) {
    std::fprintf(stderr, "error: at least one run violated an invariant (see metrics.csv)\n");
    return 1;
  }
  return 0;
}

int cmd_sweep_budget(const ExperimentConfig& config, const std::vector<int>& budgets, int seeds,
                     std::optional<Cell> start, std::optional<Cell> goal, bool trace_expansions) {
  config.validate();
  const BudgetSweepResult result =
      sweep_budget(config, budgets, seeds, start, goal,
                   trace_expansions ? &config.out_dir : nullptr);

  std::filesystem::create_directories(config.out_dir);
  std::string csv = "budget,mean_expansions,runs\n";
  std::printf("start=(%d,%d) goal=(%d,%d)\n", result.start.x, result.start.y, result.goal.x,
              result.goal.y);
  std::printf("%8s %18s %16s\n", "budget", "mean_expansions", "mean_runtime_ms");
  for (const BudgetSweepRow& row : result.rows) {
    std::printf("%8d %18.2f %16.3f\n", row.budget, row.mean_expansions, row.mean_wall_ms);
    char buf[96];
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%d\n", row.budget, row.mean_expansions, row.runs);
    csv += buf;
  }
  write_text_file(std::filesystem::path(config.out_dir) / "sweep-budget.csv", csv);
  if (!result.expansions_non_decreasing) {
    std::fprintf(stderr, "error: mean expansions are not non-decreasing in the budget\n");
    return 1;
  }
  return 0;
}

int cmd_compare_alloc(const ExperimentConfig& config, const std::vector<int>& sizes) {
  const AllocatorComparisonResult result = compare_allocators(config, sizes);

  std::filesystem::create_directories(config.out_dir);
  std::string csv = "n,rep,seed,info_sa,info_auction,messages_sa,messages_auction\n";
  std::printf("%4s %4s %12s %12s %12s %12s %10s %10s\n", "n", "rep", "info_sa", "info_auc",
              "msgs_sa", "msgs_auc", "ms_sa", "ms_auc");
  for (const AllocatorComparisonRow& row : result.rows) {
    std::printf("%4d %4d %12.4f %12.4f %12ld %12ld %10.1f %10.1f\n", row.n, row.rep, row.info_sa,
                row.info_auction, row.messages_sa, row.messages_auction, row.wall_sa_ms,
                row.wall_auction_ms);
    char buf[192];
    std::snprintf(buf, sizeof(buf), "%d,%d,%llu,%.12g,%.12g,%ld,%ld\n", row.n, row.rep,
                  static_cast<unsigned long long>(row.rep_seed), row.info_sa, row.info_auction,
                  row.messages_sa, row.messages_auction);
    csv += buf;
  }
  write_text_file(std::filesystem::path(config.out_dir) / "compare-alloc.csv", csv);

  int rc = 0;
  if (!result.info_within_15_percent) {
    std::fprintf(stderr, "error: SA and auction informativeness differ by more than 15%%\n");
    rc = 1;
  }
  if (!result.auction_messages_greater) {
    std::fprintf(stderr, "error: auction did not use strictly more messages than SA\n");
    rc = 1;
  }
  return rc;
}

int cmd_sweep_replan(const ExperimentConfig& config, const std::vector<int>& intervals, int seeds,
                     std::optional<Cell> start, std::optional<Cell> goal) {
  const ReplanSweepResult result = sweep_replan(config, intervals, seeds, start, goal);

  std::filesystem::create_directories(config.out_dir);
  std::string csv = "interval,mean_collected,mean_replans,max_replans,runs\n";
  std::printf("%10s %16s %14s %12s %16s\n", "interval", "mean_collected", "mean_replans",
              "max_replans", "mean_runtime_ms");
  for (const ReplanSweepRow& row : result.rows) {
    std::printf("%10d %16.4f %14.2f %12d %16.3f\n", row.interval, row.mean_collected,
                row.mean_replans, row.max_replans_per_run, row.mean_wall_ms);
    char buf[128];
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%d,%d\n", row.interval, row.mean_collected,
                  row.mean_replans, row.max_replans_per_run, row.runs);
    csv += buf;
  }
  write_text_file(std::filesystem::path(config.out_dir) / "sweep-replan.csv", csv);

  int rc = 0;
  if (!result.collected_non_increasing_in_interval) {
    std::fprintf(stderr,
                 "error: mean collected information is not non-increasing in the interval\n");
    rc = 1;
  }
  if (!result.replan_counts_within_bound) {
    std::fprintf(stderr, "error: a run exceeded the ceil(budget/interval) replan bound\n");
    rc = 1;
  }
  return rc;
}

int cmd_show_trace(const std::string& trace_path, int width, int height) {
  std::ifstream in(trace_path, std::ios::binary);
  if (!in) {
    std::fprintf(stderr, "error: cannot open trace %s\n", trace_path.c_str());
    return 1;
  }
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::cout << render_trace(buffer.str(), width, height);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Budget-limited informative path planning and configuration formation simulator"};
  app.require_subcommand(1);

  ExperimentConfig config;
  std::string config_path;

  auto* run = app.add_subcommand("run", "full pipeline: plan, allocate, act, write metrics");
  add_common_flags(run, config, config_path);

  std::vector<int> budgets{45, 50, 55};
  int sweep_seeds = 5;
  bool trace_expansions = false;
  std::optional<int> from_x, from_y, to_x, to_y;
  auto* sweep_b = app.add_subcommand("sweep-budget", "search cost vs budget at fixed start/goal");
  add_common_flags(sweep_b, config, config_path);
  sweep_b->add_option("--budgets", budgets, "budgets to sweep");
  sweep_b->add_option("--sweep-seeds", sweep_seeds, "independent fields per budget");
  sweep_b->add_flag("--trace-expansions", trace_expansions,
                    "write eps-expansions-b<B>.jsonl for the first seed");
  sweep_b->add_option("--from-x", from_x, "start cell x");
  sweep_b->add_option("--from-y", from_y, "start cell y");
  sweep_b->add_option("--to-x", to_x, "goal cell x");
  sweep_b->add_option("--to-y", to_y, "goal cell y");

  std::vector<int> sizes{10, 20};
  auto* compare = app.add_subcommand("compare-alloc", "SA vs auction at several sizes");
  add_common_flags(compare, config, config_path);
  compare->add_option("--sizes", sizes, "configuration sizes (modules = spots)");

  std::vector<int> intervals;
  int replan_seeds = 20;
  std::optional<int> r_from_x, r_from_y, r_to_x, r_to_y;
  auto* sweep_r = app.add_subcommand("sweep-replan", "single-module replan-interval sweep");
  add_common_flags(sweep_r, config, config_path);
  sweep_r->add_option("--intervals", intervals, "replan intervals (default B/2, B/5, B/10)");
  sweep_r->add_option("--sweep-seeds", replan_seeds, "seeds per interval");
  sweep_r->add_option("--from-x", r_from_x, "module start x");
  sweep_r->add_option("--from-y", r_from_y, "module start y");
  sweep_r->add_option("--to-x", r_to_x, "spot cell x");
  sweep_r->add_option("--to-y", r_to_y, "spot cell y");

  std::string trace_path;
  int trace_width = 30, trace_height = 30;
  auto* show = app.add_subcommand("show-trace", "render a trace file as an ASCII grid");
  show->add_option("--trace", trace_path, "trace-*.jsonl path")->required();
  show->add_option("--width", trace_width, "grid width");
  show->add_option("--height", trace_height, "grid height");

  CLI11_PARSE(app, argc, argv);

  try {
    // Config file first, then flags on top.
    if (!config_path.empty()) {
      ExperimentConfig flags_only = config;
      config = parse_config_file(config_path);
      // Re-apply any flag the user actually passed.
      for (CLI::App* cmd : {run, sweep_b, compare, sweep_r}) {
        if (!cmd->parsed()) continue;
        auto passed = [cmd](const std::string& name) { return cmd->count(name) > 0; };
        if (passed("--seed")) config.seed = flags_only.seed;
        if (passed("--out")) config.out_dir = flags_only.out_dir;
        if (passed("--reps")) config.reps = flags_only.reps;
        if (passed("--budget")) config.budget = flags_only.budget;
        if (passed("--replan-interval")) config.replan_interval = flags_only.replan_interval;
        if (passed("--modules")) config.modules = flags_only.modules;
        if (passed("--spots")) config.spots = flags_only.spots;
        if (passed("--width")) config.width = flags_only.width;
        if (passed("--height")) config.height = flags_only.height;
        if (passed("--allocator")) config.allocator = flags_only.allocator;
      }
    }

    if (run->parsed()) return cmd_run(config);
    if (sweep_b->parsed()) {
      std::optional<Cell> start, goal;
      if (from_x && from_y) start = Cell{*from_x, *from_y};
      if (to_x && to_y) goal = Cell{*to_x, *to_y};
      return cmd_sweep_budget(config, budgets, sweep_seeds, start, goal, trace_expansions);
    }
    if (compare->parsed()) return cmd_compare_alloc(config, sizes);
    if (sweep_r->parsed()) {
      if (intervals.empty())
        intervals = {std::max(1, config.budget / 2), std::max(1, config.budget / 5),
                     std::max(1, config.budget / 10)};
      std::optional<Cell> start, goal;
      if (r_from_x && r_from_y) start = Cell{*r_from_x, *r_from_y};
      if (r_to_x && r_to_y) goal = Cell{*r_to_x, *r_to_y};
      return cmd_sweep_replan(config, intervals, replan_seeds, start, goal);
    }
    if (show->parsed()) return cmd_show_trace(trace_path, trace_width, trace_height);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
