#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "modform/grid_env.hpp"

namespace modform {

// A vertex of the target configuration: one module must occupy its cell.
struct Spot {
  int id = 0;
  Pose pose;
  std::vector<int> neighbors;  // sorted spot ids
};

// Target configuration graph. Spot ids are contiguous 0..n-1; edges are
// stored normalized (a < b) and mirrored into per-spot neighbor lists.
class TargetConfig {
 public:
  TargetConfig() = default;
  TargetConfig(std::vector<Spot> spots, std::vector<std::pair<int, int>> edges);

  int size() const { return static_cast<int>(spots_.size()); }
  const std::vector<Spot>& spots() const { return spots_; }
  const Spot& spot(int id) const { return spots_.at(id); }
  Cell cell_of(int id) const { return spots_.at(id).pose.cell; }
  const std::vector<std::pair<int, int>>& edges() const { return edges_; }

  // Exact betweenness centrality per spot id, computed once and cached.
  const std::vector<double>& centrality() const;

 private:
  std::vector<Spot> spots_;
  std::vector<std::pair<int, int>> edges_;
  mutable std::optional<std::vector<double>> centrality_;
};

// Structural violations as data: degree bounds, unit-distance edges,
// connectivity, in-bounds cells, distinct cells. Empty result means valid.
std::vector<std::string> validate(const TargetConfig& config, const GridMap& map);

// Inclusive cell region; generate_random grows configurations inside one.
struct CellRegion {
  int min_x = 0, min_y = 0, max_x = 0, max_y = 0;
};

// Central square region sized for n spots (at least 4n cells, at least 8 per
// side), clamped to the map. Keeps configurations far enough from the map
// boundary that default-scale budgets remain feasible from any start.
CellRegion central_region(const GridMap& map, int spots);

// Connected random configuration of n spots grown by seeded accretion: each
// new spot is placed 4-adjacent to an existing one and connected to every
// adjacent existing spot (adjacent modules dock, so the graph is the
// unit-distance graph of the cells; degree <= 4 follows). Deterministic per
// seed; throws if n spots cannot be placed after bounded retries.
TargetConfig generate_random(std::uint64_t seed, int n, const GridMap& map);
TargetConfig generate_random(std::uint64_t seed, int n, const GridMap& map,
                             const CellRegion& region);

// Exact unweighted betweenness via Brandes' accumulation; endpoints
// excluded, undirected convention (scores halved).
std::vector<double> betweenness(const TargetConfig& config);

// Movement order for the acting phase: the most-central spot first (ties
// seeded-random), then BFS layers outward, within a layer by descending
// centrality then seeded-random.
std::vector<int> acting_order(const TargetConfig& config, std::uint64_t seed);

// Text format: one line per spot "spot <id> <x> <y> <theta>", one line per
// edge "edge <i> <j>"; parse is order-independent.
std::string to_text(const TargetConfig& config);
TargetConfig parse_config(std::string_view text);

}  // namespace modform
