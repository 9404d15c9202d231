#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace modform {

struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// Map-independent 64-bit key, usable in hash maps.
inline std::uint64_t cell_key(Cell c) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(c.x)) << 32) |
         static_cast<std::uint32_t>(c.y);
}

struct CellHash {
  std::size_t operator()(Cell c) const noexcept {
    return std::hash<std::uint64_t>{}(cell_key(c));
  }
};

// Four cardinal headings; motion is 4-connected so orientation is always one
// of these. theta follows the math convention (East = 0, counterclockwise).
enum class Heading { East = 0, North = 1, West = 2, South = 3 };

double heading_radians(Heading h);
Heading heading_from_radians(double theta);  // throws if not near a quadrant

struct Pose {
  Cell cell;
  Heading heading = Heading::East;

  friend bool operator==(const Pose&, const Pose&) = default;
};

// Dense membership set over a fixed grid domain. Deterministic iteration.
class CellSet {
 public:
  CellSet() = default;
  CellSet(int width, int height);

  bool contains(Cell c) const {
    if (c.x < 0 || c.y < 0 || c.x >= width_ || c.y >= height_) return false;
    return bits_[static_cast<std::size_t>(c.y) * width_ + c.x] != 0;
  }
  void insert(Cell c);
  void erase(Cell c);
  int size() const { return count_; }
  bool empty() const { return count_ == 0; }
  int width() const { return width_; }
  int height() const { return height_; }

  // Row-major (y, then x) order.
  std::vector<Cell> cells() const;

 private:
  int width_ = 0;
  int height_ = 0;
  int count_ = 0;
  std::vector<std::uint8_t> bits_;
};

// The environment: a bounded, non-wrapping, 4-connected grid with an
// obstacle set and a ground-truth information value per cell.
class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height);  // throws on non-positive dimensions

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t cell_count() const { return static_cast<std::size_t>(width_) * height_; }

  bool contains(Cell c) const {
    return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_;
  }
  std::size_t index(Cell c) const {
    return static_cast<std::size_t>(c.y) * width_ + c.x;
  }
  Cell cell_at(std::size_t index) const {
    return Cell{static_cast<int>(index % width_), static_cast<int>(index / width_)};
  }

  bool is_obstacle(Cell c) const { return obstacles_.contains(c); }
  void set_obstacle(Cell c);
  const CellSet& obstacles() const { return obstacles_; }

  double value(Cell c) const { return field_[index(c)]; }
  void set_value(Cell c, double v) { field_[index(c)] = v; }
  const std::vector<double>& field() const { return field_; }

 private:
  int width_ = 0;
  int height_ = 0;
  CellSet obstacles_;
  std::vector<double> field_;
};

int manhattan_distance(Cell a, Cell b);

// In-bounds von Neumann neighbors of c in fixed N, E, S, W order,
// excluding obstacles and the blocked set. N increases y, E increases x.
std::vector<Cell> neighbors4(Cell c, const GridMap& map, const CellSet& blocked);

// Grid with every cell value drawn independently from U[low, high) using the
// given seed. Identical seed gives a bit-identical field.
GridMap generate_field(std::uint64_t seed, int width, int height, double low, double high);

// One char per cell: '.' free, '#' obstacle or blocked, 'o' explored,
// '*' path/marker. Rows printed north (max y) first. Any overlay may be null.
std::string ascii_snapshot(const GridMap& map, const CellSet* blocked = nullptr,
                           const CellSet* explored = nullptr,
                           const std::vector<Cell>* path = nullptr);

// Binary 8-bit PGM (P5), row-major, values min/max-normalized to 0..255.
// Non-finite values render as 0.
std::string pgm_bytes(std::span<const double> values, int width, int height);
void write_pgm(const std::string& path, std::span<const double> values, int width, int height);

}  // namespace modform
