#include "modform/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "modform/rng.hpp"

namespace modform {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Default candidate grid for the maximum-likelihood fit. The bounds matter:
// length scales below ~2 cells make the belief ignore neighbours, and the
// noise candidates stay small because modules record near-exact ground truth
// when they visit. The ceiling is chosen so that densely sampled regions
// drop below zero entropy (the search gate prunes them) while isolated
// observations stay barely informative, which keeps budget-limited search
// non-trivial without starving the allocators of feasible paths.
HyperparamGrid default_fit_grid() {
  HyperparamGrid grid;
  grid.length_scales = {2.0, 3.0, 4.5};
  grid.signal_variances = {2.0, 6.0, 18.0};
  grid.noise_variances = {0.008, 0.016, 0.032};
  grid.max_training = 0;
  return grid;
}

std::vector<Cell> sample_distinct_cells(std::mt19937_64& rng, const GridMap& map, int count,
                                        const CellSet* excluded) {
  std::vector<Cell> out;
  CellSet used(map.width(), map.height());
  int guard = 0;
  while (static_cast<int>(out.size()) < count) {
    if (++guard > 1000 * count + 10000)
      throw std::runtime_error("sample_distinct_cells: not enough free cells");
    const Cell c{static_cast<int>(uniform_index(rng, map.width())),
                 static_cast<int>(uniform_index(rng, map.height()))};
    if (map.is_obstacle(c) || used.contains(c)) continue;
    if (excluded && excluded->contains(c)) continue;
    used.insert(c);
    out.push_back(c);
  }
  return out;
}

}  // namespace

std::string allocator_name(AllocatorChoice a) {
  switch (a) {
    case AllocatorChoice::Sa: return "sa";
    case AllocatorChoice::Auction: return "auction";
    case AllocatorChoice::Both: return "both";
  }
  return "?";
}

AllocatorChoice parse_allocator(const std::string& name) {
  if (name == "sa") return AllocatorChoice::Sa;
  if (name == "auction") return AllocatorChoice::Auction;
  if (name == "both") return AllocatorChoice::Both;
  throw std::invalid_argument("unknown allocator '" + name + "' (expected sa|auction|both)");
}

int ExperimentConfig::resolved_replan_interval() const {
  if (replan_interval > 0) return replan_interval;
  return std::max(1, budget / 2);
}

void ExperimentConfig::validate() const {
  if (width < 1 || height < 1) throw std::invalid_argument("config: grid dimensions must be >= 1");
  if (!(field_low < field_high)) throw std::invalid_argument("config: field_low must be < field_high");
  if (modules < 1 || spots < 1) throw std::invalid_argument("config: modules and spots must be >= 1");
  if (modules < spots) throw std::invalid_argument("config: modules must be >= spots");
  if (budget < 1) throw std::invalid_argument("config: budget must be >= 1");
  const int interval = resolved_replan_interval();
  if (interval < 1 || interval > budget)
    throw std::invalid_argument("config: replan_interval must be in [1, budget]");
  if (reps < 1) throw std::invalid_argument("config: reps must be >= 1");
  if (!(training_fraction > 0.0 && training_fraction < 1.0))
    throw std::invalid_argument("config: training_fraction must be in (0, 1)");
  if (!(auction_epsilon > 0.0)) throw std::invalid_argument("config: auction_epsilon must be > 0");
  if (static_cast<long>(modules) + spots > static_cast<long>(width) * height)
    throw std::invalid_argument("config: grid too small for modules + spots");
}

std::string ExperimentConfig::echo_text() const {
  std::ostringstream out;
  out << "allocator=" << allocator_name(allocator) << "\n"
      << "auction_epsilon=" << fmt(auction_epsilon) << "\n"
      << "budget=" << budget << "\n"
      << "field_high=" << fmt(field_high) << "\n"
      << "field_low=" << fmt(field_low) << "\n"
      << "height=" << height << "\n"
      << "modules=" << modules << "\n"
      << "replan_interval=" << resolved_replan_interval() << "\n"
      << "reps=" << reps << "\n"
      << "seed=" << seed << "\n"
      << "spots=" << spots << "\n"
      << "training_fraction=" << fmt(training_fraction) << "\n"
      << "width=" << width << "\n";
  return out.str();
}

void apply_config_line(ExperimentConfig& config, const std::string& key, const std::string& value) {
  try {
    if (key == "seed") config.seed = std::stoull(value);
    else if (key == "width") config.width = std::stoi(value);
    else if (key == "height") config.height = std::stoi(value);
    else if (key == "field_low") config.field_low = std::stod(value);
    else if (key == "field_high") config.field_high = std::stod(value);
    else if (key == "modules") config.modules = std::stoi(value);
    else if (key == "spots") config.spots = std::stoi(value);
    else if (key == "budget") config.budget = std::stoi(value);
    else if (key == "replan_interval") config.replan_interval = std::stoi(value);
    else if (key == "allocator") config.allocator = parse_allocator(value);
    else if (key == "reps") config.reps = std::stoi(value);
    else if (key == "training_fraction") config.training_fraction = std::stod(value);
    else if (key == "auction_epsilon") config.auction_epsilon = std::stod(value);
    else if (key == "out_dir") config.out_dir = value;
    else throw std::invalid_argument("unknown config key '" + key + "'");
  } catch (const std::invalid_argument&) {
    throw;
  } catch (const std::exception&) {
    throw std::invalid_argument("bad value for config key '" + key + "': " + value);
  }
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  ExperimentConfig config;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": expected key=value");
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    apply_config_line(config, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return config;
}

std::string metrics_csv_header() {
  return "run,allocator,seed,modules,spots,budget,replan_interval,"
         "planning_messages,position_messages,acting_messages,total_messages,"
         "estimated_informativeness,collected_information,"
         "eps_calls_planning,eps_expansions_planning,acting_steps,"
         "replans_accepted,replans_rejected,blocked_replans,max_realized_cost,"
         "no_hole,injective,budget_respected\n";
}

std::string metrics_csv_row(const RunMetrics& m) {
  std::ostringstream out;
  out << m.rep << ',' << m.allocator << ',' << m.rep_seed << ',' << m.modules << ',' << m.spots
      << ',' << m.budget << ',' << m.replan_interval << ',' << m.planning_messages << ','
      << m.position_messages << ',' << m.acting_messages << ','
      << (m.planning_messages + m.position_messages + m.acting_messages) << ','
      << fmt(m.estimated_informativeness) << ',' << fmt(m.collected_information) << ','
      << m.eps_calls_planning << ',' << m.eps_expansions_planning << ',' << m.acting_steps << ','
      << m.replans_accepted << ',' << m.replans_rejected << ',' << m.blocked_replans << ','
      << m.max_realized_cost << ',' << (m.no_hole ? 1 : 0) << ',' << (m.injective ? 1 : 0) << ','
      << (m.budget_respected ? 1 : 0) << '\n';
  return out.str();
}

namespace {

// Field generation, seeded training sample, ML fit, initial conditioning.
void build_field_and_belief(const ExperimentConfig& config, std::uint64_t rep_seed,
                            GridMap& map_out, GpState& gp_out) {
  map_out = generate_field(derive_seed(rep_seed, "field"), config.width, config.height,
                           config.field_low, config.field_high);
  const int training_count =
      std::max(2, static_cast<int>(std::floor(config.training_fraction * map_out.cell_count())));
  std::mt19937_64 train_rng(derive_seed(rep_seed, "training"));
  std::vector<Observation> training;
  for (Cell c : sample_distinct_cells(train_rng, map_out, training_count, nullptr))
    training.push_back(Observation{c, map_out.value(c)});
  const GpHyperparams hp =
      fit_hyperparameters(training, default_fit_grid(), derive_seed(rep_seed, "fit"));
  gp_out = GpState(hp);
  for (const Observation& o : training) gp_out.observe(o.cell, o.value);
}

}  // namespace

PlanningStage run_planning(const ExperimentConfig& config, std::uint64_t rep_seed) {
  const auto t0 = Clock::now();
  PlanningStage stage;
  build_field_and_belief(config, rep_seed, stage.map, stage.gp);
  stage.config = generate_random(derive_seed(rep_seed, "config"), config.spots, stage.map);

  CellSet spot_cells(config.width, config.height);
  for (const Spot& s : stage.config.spots()) spot_cells.insert(s.pose.cell);
  std::mt19937_64 start_rng(derive_seed(rep_seed, "starts"));
  stage.starts = sample_distinct_cells(start_rng, stage.map, config.modules, &spot_cells);

  CellSet all_starts(config.width, config.height);
  for (Cell c : stage.starts) all_starts.insert(c);

  const EntropyField entropy(stage.gp, stage.map);
  stage.bids.reserve(config.modules);
  for (int m = 0; m < config.modules; ++m) {
    SearchStats stats;
    stage.bids.push_back(compute_bids(m, stage.starts[m], stage.config, config.budget, entropy,
                                      stage.map, all_starts, &stats));
    stage.eps_calls += stage.config.size();
    stage.eps_expansions += stats.expansions;
  }
  stage.wall_ms = elapsed_ms(t0);
  return stage;
}

RunMetrics run_single(const ExperimentConfig& config, const PlanningStage& planning,
                      AllocatorChoice allocator, std::uint64_t rep_seed, int rep,
                      std::vector<TraceEvent>* trace_out,
                      std::vector<double>* final_entropy_out) {
  if (allocator == AllocatorChoice::Both)
    throw std::invalid_argument("run_single: allocator must be sa or auction");

  RunMetrics m;
  m.rep = rep;
  m.allocator = allocator_name(allocator);
  m.rep_seed = rep_seed;
  m.modules = config.modules;
  m.spots = config.spots;
  m.budget = config.budget;
  m.replan_interval = config.resolved_replan_interval();
  m.eps_calls_planning = planning.eps_calls;
  m.eps_expansions_planning = planning.eps_expansions;
  m.position_messages = static_cast<long>(config.modules) * (config.modules - 1);

  const Assignment assignment =
      allocator == AllocatorChoice::Sa
          ? allocate_sa(planning.bids, derive_seed(rep_seed, "alloc-sa"))
          : allocate_auction(planning.bids, config.auction_epsilon,
                             derive_seed(rep_seed, "alloc-auction"));
  m.planning_messages = assignment.message_count;
  m.estimated_informativeness = assignment.total_informativeness();
  m.injective = assignment.injective();
  m.planning_wall_ms = planning.wall_ms + assignment.planning_wall_ms;

  const std::vector<int> order = acting_order(planning.config, derive_seed(rep_seed, "order"));

  const auto t0 = Clock::now();
  SimWorld world = make_world(planning.map, planning.gp, planning.config, assignment, order,
                              planning.starts, config.budget, m.replan_interval);
  ActingReport report;
  try {
    report = run_acting(world);
  } catch (const BlockedArrivalError&) {
    // Keep the partial trace so the failure can be replayed.
    if (trace_out) *trace_out = world.trace;
    throw;
  }
  m.acting_wall_ms = elapsed_ms(t0);

  m.acting_messages = report.messages;
  m.collected_information = report.collected_information;
  m.acting_steps = report.steps;
  m.replans_accepted = report.replans_accepted;
  m.replans_rejected = report.replans_rejected;
  m.blocked_replans = report.blocked_replans;
  for (const ModuleOutcome& o : report.outcomes)
    m.max_realized_cost = std::max(m.max_realized_cost, o.realized_cost);
  m.budget_respected = m.max_realized_cost <= config.budget;
  m.no_hole = check_no_hole(world, planning.config);

  if (trace_out) *trace_out = world.trace;
  if (final_entropy_out) {
    const EntropyField entropy(world.gp, world.map);
    entropy.compute_all();
    final_entropy_out->clear();
    final_entropy_out->reserve(world.map.cell_count());
    for (std::size_t i = 0; i < world.map.cell_count(); ++i)
      final_entropy_out->push_back(entropy.at(world.map.cell_at(i)));
  }
  return m;
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  config.validate();
  std::filesystem::create_directories(config.out_dir);
  const std::filesystem::path out(config.out_dir);

  write_text_file(out / "config-echo.txt", config.echo_text());

  std::vector<AllocatorChoice> allocators;
  if (config.allocator == AllocatorChoice::Both)
    allocators = {AllocatorChoice::Sa, AllocatorChoice::Auction};
  else
    allocators = {config.allocator};

  ExperimentResult result;
  std::string csv = metrics_csv_header();
  for (int rep = 0; rep < config.reps; ++rep) {
    const std::uint64_t rep_seed = derive_seed(config.seed, "rep", rep);
    const PlanningStage planning = run_planning(config, rep_seed);
    for (AllocatorChoice alloc : allocators) {
      std::vector<TraceEvent> trace;
      std::vector<double> final_entropy;
      const std::string tag = "r" + std::to_string(rep) + "-" + allocator_name(alloc);
      RunMetrics m;
      try {
        m = run_single(config, planning, alloc, rep_seed, rep, &trace, &final_entropy);
      } catch (const BlockedArrivalError&) {
        write_text_file(out / ("trace-" + tag + ".jsonl"), trace_jsonl(trace));
        write_text_file(out / "metrics.csv", csv);
        throw;
      }
      csv += metrics_csv_row(m);
      result.rows.push_back(m);
      result.ok = result.ok && m.ok();

      write_text_file(out / ("trace-" + tag + ".jsonl"), trace_jsonl(trace));
      write_pgm((out / ("grid-" + tag + ".pgm")).string(), final_entropy, config.width,
                config.height);
    }
  }
  write_text_file(out / "metrics.csv", csv);
  return result;
}

BudgetSweepResult sweep_budget(const ExperimentConfig& config, const std::vector<int>& budgets,
                               int seeds, std::optional<Cell> start_opt,
                               std::optional<Cell> goal_opt,
                               const std::string* expansion_trace_dir) {
  if (budgets.empty()) throw std::invalid_argument("sweep_budget: no budgets");
  for (int b : budgets)
    if (b < 1) throw std::invalid_argument("sweep_budget: budgets must be >= 1");

  BudgetSweepResult result;
  result.start = start_opt.value_or(Cell{2, 2});
  result.goal = goal_opt.value_or(Cell{std::max(0, config.width - 8), std::max(0, config.height - 8)});

  const CellSet no_blocked(config.width, config.height);
  std::vector<double> sum_exp(budgets.size(), 0.0), sum_ms(budgets.size(), 0.0);

  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t rep_seed = derive_seed(config.seed, "budget-sweep", s);
    GridMap map;
    GpState gp;
    build_field_and_belief(config, rep_seed, map, gp);
    const EntropyField entropy(gp, map);

    for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
      SearchStats stats;
      std::vector<ExpansionRecord> expansions;
      const bool want_trace = expansion_trace_dir && s == 0;
      const auto t0 = Clock::now();
      (void)eps_search(result.start, result.goal, budgets[bi], entropy, map, no_blocked, &stats,
                       want_trace ? &expansions : nullptr);
      sum_ms[bi] += elapsed_ms(t0);
      sum_exp[bi] += stats.expansions;

      if (want_trace) {
        std::string jsonl;
        for (const ExpansionRecord& rec : expansions) {
          nlohmann::json j;
          j["cell"] = {rec.cell.x, rec.cell.y};
          j["g"] = rec.g;
          j["hu"] = rec.hu;
          jsonl += j.dump();
          jsonl += '\n';
        }
        std::filesystem::create_directories(*expansion_trace_dir);
        write_text_file(std::filesystem::path(*expansion_trace_dir) /
                            ("eps-expansions-b" + std::to_string(budgets[bi]) + ".jsonl"),
                        jsonl);
      }
    }
  }

  for (std::size_t bi = 0; bi < budgets.size(); ++bi) {
    BudgetSweepRow row;
    row.budget = budgets[bi];
    row.mean_expansions = sum_exp[bi] / seeds;
    row.mean_wall_ms = sum_ms[bi] / seeds;
    row.runs = seeds;
    result.rows.push_back(row);
  }

  std::vector<BudgetSweepRow> by_budget = result.rows;
  std::sort(by_budget.begin(), by_budget.end(),
            [](const BudgetSweepRow& a, const BudgetSweepRow& b) { return a.budget < b.budget; });
  result.expansions_non_decreasing = true;
  for (std::size_t i = 1; i < by_budget.size(); ++i)
    if (by_budget[i].mean_expansions < by_budget[i - 1].mean_expansions)
      result.expansions_non_decreasing = false;
  return result;
}

AllocatorComparisonResult compare_allocators(const ExperimentConfig& config,
                                             const std::vector<int>& sizes) {
  if (sizes.empty()) throw std::invalid_argument("compare_allocators: no sizes");
  AllocatorComparisonResult result;
  result.info_within_15_percent = true;
  result.auction_messages_greater = true;

  for (int n : sizes) {
    ExperimentConfig c = config;
    c.modules = n;
    c.spots = n;
    c.validate();
    for (int rep = 0; rep < config.reps; ++rep) {
      const std::uint64_t rep_seed = derive_seed(config.seed, "compare-alloc", n * 1000 + rep);
      const PlanningStage planning = run_planning(c, rep_seed);

      AllocatorComparisonRow row;
      row.n = n;
      row.rep = rep;
      row.rep_seed = rep_seed;

      const Assignment sa = allocate_sa(planning.bids, derive_seed(rep_seed, "alloc-sa"));
      row.info_sa = sa.total_informativeness();
      row.messages_sa = sa.message_count;
      row.wall_sa_ms = planning.wall_ms + sa.planning_wall_ms;

      const Assignment auction = allocate_auction(planning.bids, config.auction_epsilon,
                                                  derive_seed(rep_seed, "alloc-auction"));
      row.info_auction = auction.total_informativeness();
      row.messages_auction = auction.message_count;
      row.wall_auction_ms = planning.wall_ms + auction.planning_wall_ms;

      const double denom = std::abs(row.info_auction);
      if (denom > 0 && std::abs(row.info_sa - row.info_auction) / denom > 0.15)
        result.info_within_15_percent = false;
      if (row.messages_auction <= row.messages_sa) result.auction_messages_greater = false;
      result.rows.push_back(row);
    }
  }
  return result;
}

ReplanSweepResult sweep_replan(const ExperimentConfig& config, const std::vector<int>& intervals,
                               int seeds, std::optional<Cell> start_opt,
                               std::optional<Cell> goal_opt) {
  if (intervals.empty()) throw std::invalid_argument("sweep_replan: no intervals");
  for (int i : intervals)
    if (i < 1 || i > config.budget)
      throw std::invalid_argument("sweep_replan: intervals must lie in [1, budget]");

  const Cell start = start_opt.value_or(Cell{2, 2});
  const Cell goal = goal_opt.value_or(
      Cell{std::max(0, config.width - 8), std::max(0, config.height - 8)});

  ExperimentConfig single = config;
  single.modules = 1;
  single.spots = 1;

  ReplanSweepResult result;
  result.replan_counts_within_bound = true;

  // One planning stage per seed, shared by all intervals so they compare the
  // same instances.
  std::vector<PlanningStage> stages;
  stages.reserve(seeds);
  for (int s = 0; s < seeds; ++s) {
    const std::uint64_t rep_seed = derive_seed(config.seed, "replan-sweep", s);
    PlanningStage stage;
    const auto t0 = Clock::now();
    build_field_and_belief(single, rep_seed, stage.map, stage.gp);
    stage.config = TargetConfig({Spot{0, Pose{goal, Heading::East}, {}}}, {});
    stage.starts = {start};
    CellSet own_start(single.width, single.height);
    own_start.insert(start);
    const EntropyField entropy(stage.gp, stage.map);
    SearchStats stats;
    stage.bids.push_back(compute_bids(0, start, stage.config, single.budget, entropy, stage.map,
                                      own_start, &stats));
    stage.eps_calls = 1;
    stage.eps_expansions = stats.expansions;
    stage.wall_ms = elapsed_ms(t0);
    stages.push_back(std::move(stage));
  }

  for (int interval : intervals) {
    ReplanSweepRow row;
    row.interval = interval;
    row.runs = seeds;
    const int bound =
        static_cast<int>(std::ceil(static_cast<double>(config.budget) / interval));
    for (int s = 0; s < seeds; ++s) {
      ExperimentConfig c = single;
      c.replan_interval = interval;
      c.validate();
      const std::uint64_t rep_seed = derive_seed(config.seed, "replan-sweep", s);
      const auto t0 = Clock::now();
      const RunMetrics m = run_single(c, stages[s], AllocatorChoice::Sa, rep_seed, s);
      row.mean_wall_ms += elapsed_ms(t0) + stages[s].wall_ms;
      row.mean_collected += m.collected_information;
      const int replans = m.replans_accepted + m.replans_rejected;
      row.mean_replans += replans;
      row.max_replans_per_run = std::max(row.max_replans_per_run, replans);
      if (replans > bound) result.replan_counts_within_bound = false;
    }
    row.mean_collected /= seeds;
    row.mean_replans /= seeds;
    row.mean_wall_ms /= seeds;
    result.rows.push_back(row);
  }

  std::vector<ReplanSweepRow> by_interval = result.rows;
  std::sort(by_interval.begin(), by_interval.end(),
            [](const ReplanSweepRow& a, const ReplanSweepRow& b) { return a.interval < b.interval; });
  result.collected_non_increasing_in_interval = true;
  for (std::size_t i = 1; i < by_interval.size(); ++i)
    if (by_interval[i].mean_collected > by_interval[i - 1].mean_collected + 1e-12)
      result.collected_non_increasing_in_interval = false;
  return result;
}

std::string render_trace(const std::string& jsonl, int width, int height) {
  GridMap map(width, height);
  CellSet visited(width, height);
  std::vector<Cell> finals;
  std::unordered_map<int, Cell> last_cell;
  std::vector<int> module_order;

  std::istringstream in(jsonl);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const nlohmann::json j = nlohmann::json::parse(line);
    const Cell c{j.at("cell")[0].get<int>(), j.at("cell")[1].get<int>()};
    const int module = j.at("module").get<int>();
    if (!map.contains(c)) throw std::invalid_argument("render_trace: cell outside grid");
    const std::string event = j.at("event").get<std::string>();
    if (event == "move" || event == "reached") {
      visited.insert(c);
      if (!last_cell.contains(module)) module_order.push_back(module);
      last_cell[module] = c;
    }
  }
  for (int m : module_order) finals.push_back(last_cell.at(m));
  return ascii_snapshot(map, nullptr, &visited, &finals);
}

}  // namespace modform
