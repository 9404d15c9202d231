#include "modform/grid_env.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "modform/rng.hpp"

namespace modform {

double heading_radians(Heading h) {
  return static_cast<int>(h) * (std::numbers::pi / 2.0);
}

Heading heading_from_radians(double theta) {
  const double two_pi = 2.0 * std::numbers::pi;
  double t = std::fmod(theta, two_pi);
  if (t < 0) t += two_pi;
  for (int k = 0; k < 4; ++k) {
    if (std::abs(t - k * (std::numbers::pi / 2.0)) < 1e-6) return static_cast<Heading>(k);
  }
  if (std::abs(t - two_pi) < 1e-6) return Heading::East;
  throw std::invalid_argument("heading_from_radians: theta is not a cardinal direction");
}

CellSet::CellSet(int width, int height) : width_(width), height_(height) {
  if (width < 0 || height < 0) throw std::invalid_argument("CellSet: negative dimensions");
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

void CellSet::insert(Cell c) {
  if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_)
    throw std::out_of_range("CellSet::insert: cell outside domain");
  auto& b = bits_[static_cast<std::size_t>(c.y) * width_ + c.x];
  if (!b) {
    b = 1;
    ++count_;
  }
}

void CellSet::erase(Cell c) {
  if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_) return;
  auto& b = bits_[static_cast<std::size_t>(c.y) * width_ + c.x];
  if (b) {
    b = 0;
    --count_;
  }
}

std::vector<Cell> CellSet::cells() const {
  std::vector<Cell> out;
  out.reserve(count_);
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x)
      if (bits_[static_cast<std::size_t>(y) * width_ + x]) out.push_back(Cell{x, y});
  return out;
}

GridMap::GridMap(int width, int height) : width_(width), height_(height) {
  if (width < 1 || height < 1) throw std::invalid_argument("GridMap: dimensions must be >= 1");
  obstacles_ = CellSet(width, height);
  field_.assign(static_cast<std::size_t>(width) * height, 0.0);
}

void GridMap::set_obstacle(Cell c) {
  if (!contains(c)) throw std::out_of_range("GridMap::set_obstacle: cell outside map");
  obstacles_.insert(c);
}

int manhattan_distance(Cell a, Cell b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

std::vector<Cell> neighbors4(Cell c, const GridMap& map, const CellSet& blocked) {
  // N, E, S, W
  const Cell candidates[4] = {
      {c.x, c.y + 1}, {c.x + 1, c.y}, {c.x, c.y - 1}, {c.x - 1, c.y}};
  std::vector<Cell> out;
  out.reserve(4);
  for (const Cell& n : candidates) {
    if (!map.contains(n)) continue;
    if (map.is_obstacle(n)) continue;
    if (blocked.contains(n)) continue;
    out.push_back(n);
  }
  return out;
}

GridMap generate_field(std::uint64_t seed, int width, int height, double low, double high) {
  if (width < 1 || height < 1) throw std::invalid_argument("generate_field: dimensions must be >= 1");
  if (!(low < high)) throw std::invalid_argument("generate_field: requires low < high");
  GridMap map(width, height);
  std::mt19937_64 rng(seed);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      map.set_value(Cell{x, y}, uniform_real(rng, low, high));
  return map;
}

std::string ascii_snapshot(const GridMap& map, const CellSet* blocked, const CellSet* explored,
                           const std::vector<Cell>* path) {
  CellSet on_path(map.width(), map.height());
  if (path)
    for (const Cell& c : *path)
      if (map.contains(c)) on_path.insert(c);

  std::string out;
  out.reserve((map.width() + 1) * map.height());
  for (int y = map.height() - 1; y >= 0; --y) {
    for (int x = 0; x < map.width(); ++x) {
      const Cell c{x, y};
      char ch = '.';
      if (map.is_obstacle(c) || (blocked && blocked->contains(c)))
        ch = '#';
      else if (on_path.contains(c))
        ch = '*';
      else if (explored && explored->contains(c))
        ch = 'o';
      out.push_back(ch);
    }
    out.push_back('\n');
  }
  return out;
}

std::string pgm_bytes(std::span<const double> values, int width, int height) {
  if (static_cast<std::size_t>(width) * height != values.size())
    throw std::invalid_argument("pgm_bytes: size mismatch");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (double v : values) {
    if (!std::isfinite(v)) continue;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  const bool flat = !(hi > lo);

  std::string out = "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n255\n";
  out.reserve(out.size() + values.size());
  for (double v : values) {
    int g = 0;
    if (std::isfinite(v)) g = flat ? 128 : static_cast<int>(std::lround((v - lo) / (hi - lo) * 255.0));
    g = std::clamp(g, 0, 255);
    out.push_back(static_cast<char>(static_cast<unsigned char>(g)));
  }
  return out;
}

void write_pgm(const std::string& path, std::span<const double> values, int width, int height) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_pgm: cannot open " + path);
  const std::string bytes = pgm_bytes(values, width, height);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace modform
