#pragma once

// Voxel fingerprinting benchmark: quantize training positions into cubic
// cells, label each populated cell by majority (ties -> restricted), and
// classify a query by the populated cell whose center is nearest.

#include "uavzone/dataset.hpp"
#include "uavzone/metrics.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uavzone::fp {

using Point = std::array<double, 3>;  // x, y, h (m)
using VoxelIndex = std::array<std::int64_t, 3>;

struct VoxelCell {
  int label = 0;
  std::size_t count0 = 0;
  std::size_t count1 = 0;
};

struct LabeledPoint {
  Point p{};
  int label = 0;
};

struct VoxelMap {
  double cell_size = 10.0;
  Point origin{0.0, 0.0, 0.0};
  std::map<VoxelIndex, VoxelCell> cells;  // ordered lexicographically

  Point center(const VoxelIndex& idx) const;
};

// floor((p - origin) / cell_size) per axis.
VoxelIndex voxel_of(const Point& p, const VoxelMap& map);

VoxelMap build_map(std::span<const LabeledPoint> train, double cell_size = 10.0,
                   const Point& origin = {0.0, 0.0, 0.0});

int classify_point(const Point& p, const VoxelMap& map);

Metrics evaluate_fp(std::span<const LabeledPoint> train, std::span<const LabeledPoint> test,
                    double cell_size = 10.0);

// DataError "positions required for FP" when the table carries no positions.
std::vector<LabeledPoint> points_from_table(const data::FeatureTable& table);

std::string map_to_json(const VoxelMap& map, int indent = 2);
VoxelMap map_from_json(std::string_view text);

}  // namespace uavzone::fp
