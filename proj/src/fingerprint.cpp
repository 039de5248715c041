#include "uavzone/fingerprint.hpp"

#include "uavzone/error.hpp"

#include "json.hpp"

#include <cmath>
#include <limits>

namespace uavzone::fp {

namespace {

void check_cell_size(double s) {
  if (!(s > 0.0) || !std::isfinite(s)) throw ConfigError("voxel cell size must be > 0");
}

void check_point(const Point& p) {
  for (double v : p)
    if (!std::isfinite(v)) throw DataError("non-finite position");
}

}  // namespace

Point VoxelMap::center(const VoxelIndex& idx) const {
  Point c{};
  for (int a = 0; a < 3; ++a) c[a] = origin[a] + (static_cast<double>(idx[a]) + 0.5) * cell_size;
  return c;
}

VoxelIndex voxel_of(const Point& p, const VoxelMap& map) {
  VoxelIndex idx{};
  for (int a = 0; a < 3; ++a)
    idx[a] = static_cast<std::int64_t>(std::floor((p[a] - map.origin[a]) / map.cell_size));
  return idx;
}

VoxelMap build_map(std::span<const LabeledPoint> train, double cell_size, const Point& origin) {
  check_cell_size(cell_size);
  if (train.empty()) throw DataError("fingerprint map needs at least one training point");
  VoxelMap map;
  map.cell_size = cell_size;
  map.origin = origin;
  for (const auto& lp : train) {
    check_point(lp.p);
    if (lp.label != 0 && lp.label != 1) throw DataError("labels must be 0 or 1");
    auto& cell = map.cells[voxel_of(lp.p, map)];
    (lp.label == 1 ? cell.count1 : cell.count0) += 1;
  }
  for (auto& [_, cell] : map.cells) cell.label = cell.count1 >= cell.count0 ? 1 : 0;
  return map;
}

int classify_point(const Point& p, const VoxelMap& map) {
  if (map.cells.empty()) throw DataError("fingerprint map is empty");
  check_point(p);
  // Map iteration is lexicographic, so keeping the first strict minimum
  // resolves distance ties to the smallest index.
  double best = std::numeric_limits<double>::infinity();
  int label = 0;
  for (const auto& [idx, cell] : map.cells) {
    const Point c = map.center(idx);
    double d = 0.0;
    for (int a = 0; a < 3; ++a) d += (p[a] - c[a]) * (p[a] - c[a]);
    if (d < best) {
      best = d;
      label = cell.label;
    }
  }
  return label;
}

Metrics evaluate_fp(std::span<const LabeledPoint> train, std::span<const LabeledPoint> test,
                    double cell_size) {
  if (test.empty()) throw DataError("fingerprint test set is empty");
  const VoxelMap map = build_map(train, cell_size);
  std::vector<int> pred, y;
  pred.reserve(test.size());
  y.reserve(test.size());
  for (const auto& lp : test) {
    pred.push_back(classify_point(lp.p, map));
    y.push_back(lp.label);
  }
  return compute_metrics(pred, y);
}

std::vector<LabeledPoint> points_from_table(const data::FeatureTable& table) {
  if (!table.positions) throw DataError("positions required for FP");
  const auto& pos = *table.positions;
  std::vector<LabeledPoint> out(table.rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out[i] = {{pos(r, 0), pos(r, 1), pos(r, 2)}, table.y[i]};
  }
  return out;
}

std::string map_to_json(const VoxelMap& map, int indent) {
  nlohmann::ordered_json j;
  j["format"] = "uavzone-voxel-map";
  j["cell_size"] = map.cell_size;
  j["origin"] = map.origin;
  auto cells = nlohmann::ordered_json::array();
  for (const auto& [idx, cell] : map.cells)
    cells.push_back({{"index", idx}, {"label", cell.label}, {"count0", cell.count0}, {"count1", cell.count1}});
  j["cells"] = cells;
  return j.dump(indent);
}

VoxelMap map_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.value("format", "") != "uavzone-voxel-map") throw DataError("not a voxel map");
    VoxelMap map;
    map.cell_size = j.at("cell_size").get<double>();
    check_cell_size(map.cell_size);
    map.origin = j.at("origin").get<Point>();
    for (const auto& c : j.at("cells")) {
      VoxelCell cell;
      cell.label = c.at("label").get<int>();
      cell.count0 = c.at("count0").get<std::size_t>();
      cell.count1 = c.at("count1").get<std::size_t>();
      if ((cell.label != 0 && cell.label != 1) || cell.count0 + cell.count1 == 0)
        throw DataError("invalid voxel cell");
      map.cells[c.at("index").get<VoxelIndex>()] = cell;
    }
    return map;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("invalid voxel map: ") + e.what());
  }
}

}  // namespace uavzone::fp
