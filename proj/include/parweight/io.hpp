#pragma once

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "parweight/pargeo.hpp"

namespace parweight {

/// Point-cloud JSON: {points, masses, dist, K0} or {grid: {dim, extent, n_cells}}.
/// Throws Config on malformed input.
std::shared_ptr<const PointCloudSpace> space_from_json(const std::string& text);
std::shared_ptr<const PointCloudSpace> load_space(const std::string& path);

/// CSV with header cell_point_id,time_index,value; every cell exactly once.
std::vector<double> read_field_csv(const std::string& path, const SpaceTimeGrid& grid);
void write_field_csv(const std::string& path, const SpaceTimeGrid& grid,
                     std::span<const double> values);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace parweight
