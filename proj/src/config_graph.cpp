#include "modform/config_graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include "modform/rng.hpp"

namespace modform {

TargetConfig::TargetConfig(std::vector<Spot> spots, std::vector<std::pair<int, int>> edges)
    : spots_(std::move(spots)) {
  const int n = static_cast<int>(spots_.size());
  std::sort(spots_.begin(), spots_.end(), [](const Spot& a, const Spot& b) { return a.id < b.id; });
  for (int i = 0; i < n; ++i) {
    if (spots_[i].id != i)
      throw std::invalid_argument("TargetConfig: spot ids must be contiguous 0..n-1");
    spots_[i].neighbors.clear();
  }
  for (auto& [a, b] : edges) {
    if (a == b) throw std::invalid_argument("TargetConfig: self-loop edge");
    if (a < 0 || b < 0 || a >= n || b >= n)
      throw std::invalid_argument("TargetConfig: edge references unknown spot");
    if (a > b) std::swap(a, b);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  for (const auto& [a, b] : edges_) {
    spots_[a].neighbors.push_back(b);
    spots_[b].neighbors.push_back(a);
  }
  for (Spot& s : spots_) std::sort(s.neighbors.begin(), s.neighbors.end());
}

const std::vector<double>& TargetConfig::centrality() const {
  if (!centrality_) centrality_ = betweenness(*this);
  return *centrality_;
}

std::vector<std::string> validate(const TargetConfig& config, const GridMap& map) {
  std::vector<std::string> violations;
  const int n = config.size();

  for (const Spot& s : config.spots()) {
    if (!map.contains(s.pose.cell))
      violations.push_back("spot " + std::to_string(s.id) + " is outside the map");
    if (n > 1 && (s.neighbors.empty() || s.neighbors.size() > 4))
      violations.push_back("spot " + std::to_string(s.id) + " has degree " +
                           std::to_string(s.neighbors.size()) + ", expected 1..4");
  }

  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (config.cell_of(i) == config.cell_of(j))
        violations.push_back("spots " + std::to_string(i) + " and " + std::to_string(j) +
                             " share a cell");

  for (const auto& [a, b] : config.edges())
    if (manhattan_distance(config.cell_of(a), config.cell_of(b)) != 1)
      violations.push_back("edge " + std::to_string(a) + "-" + std::to_string(b) +
                           " is not unit distance");

  if (n > 1) {
    std::vector<char> seen(n, 0);
    std::deque<int> queue{0};
    seen[0] = 1;
    int reached = 1;
    while (!queue.empty()) {
      const int u = queue.front();
      queue.pop_front();
      for (int v : config.spot(u).neighbors)
        if (!seen[v]) {
          seen[v] = 1;
          ++reached;
          queue.push_back(v);
        }
    }
    if (reached != n) violations.push_back("configuration graph is not connected");
  }
  return violations;
}

CellRegion central_region(const GridMap& map, int spots) {
  int side = std::max(8, static_cast<int>(std::ceil(std::sqrt(4.0 * std::max(1, spots)))));
  side = std::min({side, map.width(), map.height()});
  const int x0 = (map.width() - side) / 2;
  const int y0 = (map.height() - side) / 2;
  return CellRegion{x0, y0, x0 + side - 1, y0 + side - 1};
}

namespace {

bool in_region(Cell c, const CellRegion& r) {
  return c.x >= r.min_x && c.x <= r.max_x && c.y >= r.min_y && c.y <= r.max_y;
}

std::optional<TargetConfig> try_grow(std::mt19937_64& rng, int n, const GridMap& map,
                                     const CellRegion& region) {
  std::vector<Spot> spots;
  std::vector<std::pair<int, int>> edges;
  std::unordered_map<std::uint64_t, int> at_cell;

  auto random_heading = [&rng] { return static_cast<Heading>(uniform_index(rng, 4)); };

  const int rw = region.max_x - region.min_x + 1;
  const int rh = region.max_y - region.min_y + 1;
  const Cell first{region.min_x + static_cast<int>(uniform_index(rng, rw)),
                   region.min_y + static_cast<int>(uniform_index(rng, rh))};
  if (map.is_obstacle(first)) return std::nullopt;
  spots.push_back(Spot{0, Pose{first, random_heading()}, {}});
  at_cell[cell_key(first)] = 0;

  while (static_cast<int>(spots.size()) < n) {
    // Anchors: existing spots with at least one free adjacent in-region cell.
    std::vector<std::pair<int, Cell>> frontier;
    for (const Spot& s : spots) {
      const Cell c = s.pose.cell;
      const Cell around[4] = {{c.x, c.y + 1}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x - 1, c.y}};
      for (const Cell& f : around) {
        if (!map.contains(f) || map.is_obstacle(f) || !in_region(f, region)) continue;
        if (at_cell.contains(cell_key(f))) continue;
        frontier.emplace_back(s.id, f);
      }
    }
    if (frontier.empty()) return std::nullopt;

    const auto& [anchor, cell] = frontier[uniform_index(rng, frontier.size())];
    const int id = static_cast<int>(spots.size());
    spots.push_back(Spot{id, Pose{cell, random_heading()}, {}});
    at_cell[cell_key(cell)] = id;

    // Adjacent modules dock, so every unit-distance pair is an edge. Sparse
    // edge sets would let a geometrically interior spot sit in an outer BFS
    // layer of the acting order, and its module would arrive to find every
    // neighbouring cell already occupied.
    const Cell around[4] = {{cell.x, cell.y + 1}, {cell.x + 1, cell.y},
                            {cell.x, cell.y - 1}, {cell.x - 1, cell.y}};
    for (const Cell& a : around) {
      const auto it = at_cell.find(cell_key(a));
      if (it == at_cell.end()) continue;
      edges.emplace_back(it->second, id);
    }
  }
  return TargetConfig(std::move(spots), std::move(edges));
}

}  // namespace

TargetConfig generate_random(std::uint64_t seed, int n, const GridMap& map) {
  return generate_random(seed, n, map, central_region(map, n));
}

TargetConfig generate_random(std::uint64_t seed, int n, const GridMap& map,
                             const CellRegion& region) {
  if (n < 1) throw std::invalid_argument("generate_random: n must be >= 1");
  if (region.min_x < 0 || region.min_y < 0 || region.max_x >= map.width() ||
      region.max_y >= map.height() || region.min_x > region.max_x || region.min_y > region.max_y)
    throw std::invalid_argument("generate_random: region outside the map");

  constexpr int kMaxRetries = 50;
  for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
    std::mt19937_64 rng(derive_seed(seed, "config-grow", attempt));
    if (auto config = try_grow(rng, n, map, region)) return std::move(*config);
  }
  throw std::runtime_error("generate_random: could not place " + std::to_string(n) +
                           " spots after bounded retries (region too small?)");
}

std::vector<double> betweenness(const TargetConfig& config) {
  const int n = config.size();
  std::vector<double> cb(n, 0.0);

  std::vector<int> dist(n), stack_order;
  std::vector<double> sigma(n), delta(n);
  std::vector<std::vector<int>> preds(n);

  for (int s = 0; s < n; ++s) {
    std::fill(dist.begin(), dist.end(), -1);
    std::fill(sigma.begin(), sigma.end(), 0.0);
    std::fill(delta.begin(), delta.end(), 0.0);
    for (auto& p : preds) p.clear();
    stack_order.clear();

    dist[s] = 0;
    sigma[s] = 1.0;
    std::deque<int> queue{s};
    while (!queue.empty()) {
      const int v = queue.front();
      queue.pop_front();
      stack_order.push_back(v);
      for (int w : config.spot(v).neighbors) {
        if (dist[w] < 0) {
          dist[w] = dist[v] + 1;
          queue.push_back(w);
        }
        if (dist[w] == dist[v] + 1) {
          sigma[w] += sigma[v];
          preds[w].push_back(v);
        }
      }
    }

    for (auto it = stack_order.rbegin(); it != stack_order.rend(); ++it) {
      const int w = *it;
      for (int v : preds[w]) delta[v] += sigma[v] / sigma[w] * (1.0 + delta[w]);
      if (w != s) cb[w] += delta[w];
    }
  }

  for (double& v : cb) v /= 2.0;  // undirected
  return cb;
}

std::vector<int> acting_order(const TargetConfig& config, std::uint64_t seed) {
  const int n = config.size();
  const std::vector<double>& cb = config.centrality();
  std::mt19937_64 rng(seed);

  // Per-spot random priority used for all tie-breaking.
  std::vector<double> priority(n);
  for (double& p : priority) p = uniform_unit(rng);

  int center = 0;
  for (int i = 1; i < n; ++i) {
    if (cb[i] > cb[center] || (cb[i] == cb[center] && priority[i] < priority[center])) center = i;
  }

  std::vector<int> order;
  order.reserve(n);
  std::vector<char> seen(n, 0);
  std::vector<int> layer{center};
  seen[center] = 1;
  while (!layer.empty()) {
    std::sort(layer.begin(), layer.end(), [&](int a, int b) {
      if (cb[a] != cb[b]) return cb[a] > cb[b];
      if (priority[a] != priority[b]) return priority[a] < priority[b];
      return a < b;
    });
    order.insert(order.end(), layer.begin(), layer.end());
    std::vector<int> next;
    for (int u : layer)
      for (int v : config.spot(u).neighbors)
        if (!seen[v]) {
          seen[v] = 1;
          next.push_back(v);
        }
    layer = std::move(next);
  }
  if (static_cast<int>(order.size()) != n)
    throw std::runtime_error("acting_order: configuration graph is not connected");
  return order;
}

std::string to_text(const TargetConfig& config) {
  std::string out;
  char buf[96];
  for (const Spot& s : config.spots()) {
    std::snprintf(buf, sizeof(buf), "spot %d %d %d %.17g\n", s.id, s.pose.cell.x, s.pose.cell.y,
                  heading_radians(s.pose.heading));
    out += buf;
  }
  for (const auto& [a, b] : config.edges()) {
    std::snprintf(buf, sizeof(buf), "edge %d %d\n", a, b);
    out += buf;
  }
  return out;
}

TargetConfig parse_config(std::string_view text) {
  std::vector<Spot> spots;
  std::vector<std::pair<int, int>> edges;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::istringstream ls(line);
    std::string kind;
    if (!(ls >> kind)) continue;  // blank line
    if (kind == "spot") {
      int id, x, y;
      double theta;
      if (!(ls >> id >> x >> y >> theta))
        throw std::invalid_argument("parse_config: bad spot line " + std::to_string(lineno));
      spots.push_back(Spot{id, Pose{Cell{x, y}, heading_from_radians(theta)}, {}});
    } else if (kind == "edge") {
      int a, b;
      if (!(ls >> a >> b))
        throw std::invalid_argument("parse_config: bad edge line " + std::to_string(lineno));
      edges.emplace_back(a, b);
    } else {
      throw std::invalid_argument("parse_config: unknown line kind '" + kind + "'");
    }
  }
  return TargetConfig(std::move(spots), std::move(edges));
}

}  // namespace modform
