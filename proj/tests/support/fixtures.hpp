#pragma once

// Small shared fixtures for the test suite.

#include <cstdint>

#include "fleeta/grid.hpp"

namespace fleeta::testutil {

// Warehouse map with default shelf layout parameters at the given size.
inline GridMap warehouse(int width, int height, uint64_t seed) {
  WarehouseGenParams params;
  params.seed = seed;
  params.width = width;
  params.height = height;
  return generate_warehouse_map(params);
}

}  // namespace fleeta::testutil
