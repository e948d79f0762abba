#include "fleeta/grid.hpp"

#include <algorithm>
#include <deque>

#include "fleeta/rng.hpp"

namespace fleeta {

GridMap::GridMap(int width_, int height_, std::vector<uint8_t> occupancy_,
                 double meters_per_cell_)
    : width(width_),
      height(height_),
      occupancy(std::move(occupancy_)),
      meters_per_cell(meters_per_cell_) {
  if (width < 2 || height < 2)
    throw InvalidParams("map dimensions must be at least 2x2");
  if (occupancy.size() != static_cast<size_t>(width) * height)
    throw InvalidParams("occupancy size does not match map dimensions");
  for (uint8_t v : occupancy)
    if (v != kFree && v != kOccupied)
      throw InvalidParams("occupancy values must be 0 (free) or 1 (occupied)");
  if (count_free() == 0) throw InvalidParams("map has no free cell");
}

GridMap GridMap::empty(int width_, int height_) {
  return GridMap(width_, height_,
                 std::vector<uint8_t>(static_cast<size_t>(width_) * height_,
                                      kFree));
}

int GridMap::count_free() const {
  int n = 0;
  for (uint8_t v : occupancy) n += (v == kFree);
  return n;
}

std::vector<Cell> neighbors(const GridMap& map, const Cell& c) {
  if (!map.in_bounds(c)) throw OutOfBounds("neighbor query out of bounds");
  if (!map.is_free(c)) throw OccupiedCell("neighbor query on occupied cell");
  // Fixed order: up, right, down, left.
  const Cell cand[4] = {{c.x, c.y - 1}, {c.x + 1, c.y}, {c.x, c.y + 1},
                        {c.x - 1, c.y}};
  std::vector<Cell> out;
  out.reserve(4);
  for (const Cell& n : cand)
    if (map.is_free(n)) out.push_back(n);
  return out;
}

bool free_space_connected(const GridMap& map) {
  int start = -1;
  for (int i = 0; i < map.size(); ++i)
    if (map.occupancy[i] == kFree) {
      start = i;
      break;
    }
  if (start < 0) return false;
  std::vector<uint8_t> seen(map.size(), 0);
  std::deque<int> queue{start};
  seen[start] = 1;
  int reached = 0;
  while (!queue.empty()) {
    int idx = queue.front();
    queue.pop_front();
    ++reached;
    for (const Cell& n : neighbors(map, map.cell(idx))) {
      int ni = map.index(n);
      if (!seen[ni]) {
        seen[ni] = 1;
        queue.push_back(ni);
      }
    }
  }
  return reached == map.count_free();
}

namespace {

// Label free cells with component ids; returns component count.
int label_components(const GridMap& map, std::vector<int>& comp) {
  comp.assign(map.size(), -1);
  int n_comp = 0;
  for (int i = 0; i < map.size(); ++i) {
    if (map.occupancy[i] != kFree || comp[i] >= 0) continue;
    std::deque<int> queue{i};
    comp[i] = n_comp;
    while (!queue.empty()) {
      int idx = queue.front();
      queue.pop_front();
      for (const Cell& n : neighbors(map, map.cell(idx))) {
        int ni = map.index(n);
        if (comp[ni] < 0) {
          comp[ni] = n_comp;
          queue.push_back(ni);
        }
      }
    }
    ++n_comp;
  }
  return n_comp;
}

// Connect every secondary component to the largest one by carving straight
// corridors (x first, then y).  Carving only removes obstacles, so the
// repaired map keeps its shelf structure.
void carve_connect(GridMap& map) {
  for (;;) {
    std::vector<int> comp;
    int n_comp = label_components(map, comp);
    if (n_comp <= 1) return;
    std::vector<int> comp_size(n_comp, 0);
    for (int i = 0; i < map.size(); ++i)
      if (comp[i] >= 0) ++comp_size[comp[i]];
    int main_comp = static_cast<int>(
        std::max_element(comp_size.begin(), comp_size.end()) -
        comp_size.begin());
    // First cell (row-major) of the first non-main component, and the
    // nearest main-component cell to it.
    int from = -1;
    for (int i = 0; i < map.size(); ++i)
      if (comp[i] >= 0 && comp[i] != main_comp) {
        from = i;
        break;
      }
    Cell a = map.cell(from);
    int best = -1, best_d = INT32_MAX;
    for (int i = 0; i < map.size(); ++i)
      if (comp[i] == main_comp) {
        int d = manhattan(a, map.cell(i));
        if (d < best_d) {
          best_d = d;
          best = i;
        }
      }
    Cell b = map.cell(best);
    Cell c = a;
    while (c.x != b.x) {
      c.x += (b.x > c.x) ? 1 : -1;
      map.set(c, kFree);
    }
    while (c.y != b.y) {
      c.y += (b.y > c.y) ? 1 : -1;
      map.set(c, kFree);
    }
  }
}

}  // namespace

GridMap generate_warehouse_map(const WarehouseGenParams& p) {
  if (p.width < 8 || p.width > 128 || p.height < 8 || p.height > 128)
    throw InvalidParams("map dimensions must be within [8, 128]");
  if (p.shelf_row_period < 2)
    throw InvalidParams("shelf_row_period must be at least 2");
  if (p.shelf_gap_period < 2)
    throw InvalidParams("shelf_gap_period must be at least 2");
  if (p.obstacle_density_jitter < 0.0 || p.obstacle_density_jitter >= 1.0)
    throw InvalidParams("obstacle_density_jitter must be in [0, 1)");

  for (int attempt = 0; attempt < 100; ++attempt) {
    std::mt19937_64 rng = make_rng(substream_seed(p.seed, attempt));
    GridMap map = GridMap::empty(p.width, p.height);
    // Shelf rows with door gaps.  The border ring stays free so traffic can
    // always circulate around the outside of the racks.
    for (int y = 2; y < p.height - 2; y += p.shelf_row_period) {
      int phase = static_cast<int>(uniform_below(rng, p.shelf_gap_period));
      for (int x = 1; x < p.width - 1; ++x) {
        if ((x + phase) % p.shelf_gap_period == 0) continue;  // door gap
        map.set({x, y}, kOccupied);
      }
    }
    // Jitter: sprinkle extra obstacles in the interior.
    for (int y = 1; y < p.height - 1; ++y)
      for (int x = 1; x < p.width - 1; ++x) {
        double u = uniform01(rng);
        if (map.occupancy[map.index({x, y})] == kFree &&
            u < p.obstacle_density_jitter)
          map.set({x, y}, kOccupied);
      }
    carve_connect(map);
    double free_frac = static_cast<double>(map.count_free()) / map.size();
    if (free_frac < 0.2 || free_frac > 0.8) continue;
    return map;
  }
  throw GenerationFailed("no valid warehouse map within 100 attempts");
}

std::string save_map(const GridMap& map) {
  std::string out = "P-GRID " + std::to_string(map.width) + " " +
                    std::to_string(map.height) + "\n";
  out.reserve(out.size() + static_cast<size_t>(map.height) * (map.width + 1));
  for (int y = 0; y < map.height; ++y) {
    for (int x = 0; x < map.width; ++x)
      out += (map.occupancy[map.index({x, y})] == kFree) ? '.' : '#';
    out += '\n';
  }
  return out;
}

namespace {

// Splits text into lines, requiring LF endings.
std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char ch : text) {
    if (ch == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (!cur.empty()) lines.push_back(cur);  // tolerate missing final LF
  return lines;
}

}  // namespace

GridMap load_map(const std::string& text) {
  std::vector<std::string> lines = split_lines(text);
  if (lines.empty()) throw ParseError("empty map file", 1, 1);
  const std::string& header = lines[0];
  const std::string magic = "P-GRID ";
  if (header.rfind(magic, 0) != 0)
    throw ParseError("expected 'P-GRID <width> <height>' header", 1, 1);
  int width = 0, height = 0;
  {
    size_t pos = magic.size();
    size_t sp = header.find(' ', pos);
    if (sp == std::string::npos)
      throw ParseError("header missing height", 1,
                       static_cast<int>(header.size()) + 1);
    try {
      size_t used = 0;
      width = std::stoi(header.substr(pos, sp - pos), &used);
      if (used != sp - pos) throw std::invalid_argument("");
      std::string h = header.substr(sp + 1);
      height = std::stoi(h, &used);
      if (used != h.size()) throw std::invalid_argument("");
    } catch (const std::logic_error&) {
      throw ParseError("header dimensions are not integers", 1,
                       static_cast<int>(pos) + 1);
    }
  }
  if (width < 2 || height < 2)
    throw ParseError("dimensions must be at least 2x2", 1,
                     static_cast<int>(magic.size()) + 1);
  if (static_cast<int>(lines.size()) < height + 1)
    throw ParseError("fewer grid rows than the declared height",
                     static_cast<int>(lines.size()) + 1, 1);
  if (static_cast<int>(lines.size()) > height + 1)
    throw ParseError("more grid rows than the declared height", height + 2, 1);
  std::vector<uint8_t> occ(static_cast<size_t>(width) * height, kFree);
  for (int y = 0; y < height; ++y) {
    const std::string& row = lines[y + 1];
    if (static_cast<int>(row.size()) != width)
      throw ParseError("row width does not match the declared width", y + 2,
                       static_cast<int>(row.size()) + 1);
    for (int x = 0; x < width; ++x) {
      char ch = row[x];
      if (ch == '.')
        occ[static_cast<size_t>(y) * width + x] = kFree;
      else if (ch == '#')
        occ[static_cast<size_t>(y) * width + x] = kOccupied;
      else
        throw ParseError(std::string("unexpected character '") + ch + "'",
                         y + 2, x + 1);
    }
  }
  try {
    return GridMap(width, height, std::move(occ));
  } catch (const InvalidParams& e) {
    throw ParseError(e.what(), 1, 1);
  }
}

}  // namespace fleeta
