#include "parweight/io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "parweight/error.hpp"

namespace parweight {

using nlohmann::json;

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Config, "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Config, "cannot write " + path);
  out << text;
}

std::shared_ptr<const PointCloudSpace> space_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("space: ") + e.what());
  }
  try {
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      return std::make_shared<const PointCloudSpace>(PointCloudSpace::euclidean_grid(
          g.at("dim").get<int>(), g.at("extent").get<double>(), g.at("n_cells").get<std::size_t>()));
    }
    const auto masses = j.at("masses").get<std::vector<double>>();
    const std::string dist = j.value("dist", std::string("euclidean_l2"));
    const double K0 = j.value("K0", 1.0);
    if (dist == "matrix") {
      std::vector<double> flat;
      // Rows under "matrix", or under "points" when the points are given by distances.
      for (const auto& row : j.contains("matrix") ? j.at("matrix") : j.at("points")) {
        const auto r = row.get<std::vector<double>>();
        if (r.size() != masses.size()) throw Error(ErrorKind::Config, "space: matrix row length");
        flat.insert(flat.end(), r.begin(), r.end());
      }
      if (flat.size() != masses.size() * masses.size())
        throw Error(ErrorKind::Config, "space: matrix must be n x n");
      return std::make_shared<const PointCloudSpace>(
          PointCloudSpace::from_matrix(std::move(flat), masses, K0));
    }
    Metric metric;
    if (dist == "euclidean_sup")
      metric = Metric::euclidean_sup;
    else if (dist == "euclidean_l2")
      metric = Metric::euclidean_l2;
    else
      throw Error(ErrorKind::Config, "space: unknown dist '" + dist + "'");
    auto points = j.at("points").get<std::vector<std::vector<double>>>();
    return std::make_shared<const PointCloudSpace>(
        PointCloudSpace::from_points(std::move(points), masses, metric, K0));
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Config, std::string("space: ") + e.what());
  }
}

std::shared_ptr<const PointCloudSpace> load_space(const std::string& path) {
  return space_from_json(read_text_file(path));
}

std::vector<double> read_field_csv(const std::string& path, const SpaceTimeGrid& grid) {
  std::istringstream in(read_text_file(path));
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Config, path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "cell_point_id,time_index,value")
    throw Error(ErrorKind::Config, path + ": expected header cell_point_id,time_index,value");
  std::vector<double> values(grid.n_cells(), 0.0);
  std::vector<char> seen(grid.n_cells(), 0);
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    std::istringstream row(line);
    std::string a, b, c;
    if (!std::getline(row, a, ',') || !std::getline(row, b, ',') || !std::getline(row, c))
      throw Error(ErrorKind::Config, path + ":" + std::to_string(lineno) + ": expected 3 columns");
    std::size_t i;
    long s;
    double v;
    try {
      i = std::stoul(a);
      s = std::stol(b);
      v = std::stod(c);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Config, path + ":" + std::to_string(lineno) + ": bad number");
    }
    if (i >= grid.n_points() || s < 0 || s >= static_cast<long>(grid.nt()))
      throw Error(ErrorKind::Config, path + ":" + std::to_string(lineno) + ": cell out of range");
    const std::size_t cell = grid.cell(i, s);
    if (seen[cell]) throw Error(ErrorKind::Config, path + ":" + std::to_string(lineno) + ": duplicate cell");
    seen[cell] = 1;
    values[cell] = v;
  }
  for (std::size_t cell = 0; cell < seen.size(); ++cell)
    if (!seen[cell]) throw Error(ErrorKind::Config, path + ": missing cell " + std::to_string(cell));
  return values;
}

void write_field_csv(const std::string& path, const SpaceTimeGrid& grid,
                     std::span<const double> values) {
  std::ostringstream out;
  out.precision(17);
  out << "cell_point_id,time_index,value\n";
  for (std::size_t i = 0; i < grid.n_points(); ++i)
    for (long s = 0; s < static_cast<long>(grid.nt()); ++s)
      out << i << ',' << s << ',' << values[grid.cell(i, s)] << '\n';
  write_text_file(path, out.str());
}

}  // namespace parweight
