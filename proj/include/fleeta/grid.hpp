/*
 * grid.hpp
 *
 * 4-connected grid world for warehouse fleet experiments.
 * One cell is one square meter; cells are either free or occupied
 * (shelving / walls).  Includes a deterministic warehouse-style map
 * generator and a plain-text map format.
 */
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace fleeta {

struct Cell {
  int x = 0;
  int y = 0;
  bool operator==(const Cell&) const = default;
};

// Row-major order: (y, x) ascending.  Used for deterministic tie-breaking.
inline bool cell_less(const Cell& a, const Cell& b) {
  return (a.y != b.y) ? a.y < b.y : a.x < b.x;
}

inline int manhattan(const Cell& a, const Cell& b) {
  return std::abs(a.x - b.x) + std::abs(a.y - b.y);
}

struct GridError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvalidParams : GridError {
  using GridError::GridError;
};
struct GenerationFailed : GridError {
  using GridError::GridError;
};
struct OutOfBounds : GridError {
  using GridError::GridError;
};
struct OccupiedCell : GridError {
  using GridError::GridError;
};
struct ParseError : GridError {
  int line = 0;  // 1-based
  int column = 0;  // 1-based
  ParseError(const std::string& msg, int line_, int column_)
      : GridError(msg + " (line " + std::to_string(line_) + ", column " +
                  std::to_string(column_) + ")"),
        line(line_),
        column(column_) {}
};

constexpr uint8_t kFree = 0;
constexpr uint8_t kOccupied = 1;

// Rectangular occupancy grid.  Invariants (checked on construction):
// width >= 2, height >= 2, occupancy.size() == width * height, and at
// least one free cell.
struct GridMap {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> occupancy;  // row-major, occupancy[y * width + x]
  double meters_per_cell = 1.0;

  GridMap(int width_, int height_, std::vector<uint8_t> occupancy_,
          double meters_per_cell_ = 1.0);

  // All-free map.
  static GridMap empty(int width_, int height_);

  int size() const { return width * height; }
  int index(const Cell& c) const { return c.y * width + c.x; }
  Cell cell(int idx) const { return Cell{idx % width, idx / width}; }
  bool in_bounds(const Cell& c) const {
    return c.x >= 0 && c.x < width && c.y >= 0 && c.y < height;
  }
  bool is_free(const Cell& c) const {
    return in_bounds(c) && occupancy[index(c)] == kFree;
  }
  void set(const Cell& c, uint8_t v) { occupancy[index(c)] = v; }
  int count_free() const;

  bool operator==(const GridMap&) const = default;
};

// Free 4-neighbors of a free cell, in fixed order: up, right, down, left
// (up means decreasing y).  Throws OutOfBounds / OccupiedCell on a bad query
// cell.  The fixed order is relied on for deterministic tie-breaking
// throughout the planners.
std::vector<Cell> neighbors(const GridMap& map, const Cell& c);

struct WarehouseGenParams {
  uint64_t seed = 0;
  int width = 32;
  int height = 32;
  int shelf_row_period = 3;   // vertical spacing between shelf rows (cells)
  int shelf_gap_period = 8;   // horizontal spacing between door gaps (cells)
  double obstacle_density_jitter = 0.05;  // extra random obstacles, per cell
};

// Deterministic warehouse-style map: periodic shelf rows with door gaps,
// plus jittered extra obstacles.  The free space is guaranteed connected
// (disconnected pockets are repaired by carving corridors) and the free
// fraction lands in [0.2, 0.8].  Throws InvalidParams for out-of-range
// parameters and GenerationFailed if no valid map is found within 100
// attempts.
GridMap generate_warehouse_map(const WarehouseGenParams& params);

// True when every free cell is 4-connected to every other free cell.
bool free_space_connected(const GridMap& map);

// Plain-text map format:
//   line 1:  P-GRID <width> <height>
//   then <height> lines of <width> characters, '.' = free, '#' = occupied.
// LF line endings, no trailing whitespace.
std::string save_map(const GridMap& map);
GridMap load_map(const std::string& text);

}  // namespace fleeta
