#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace parweight {

enum class Metric { matrix, euclidean_sup, euclidean_l2 };

enum class SpaceKind { euclidean_grid, general };

/// Regular cell-centered grid on [0, extent)^dim, n_cells per axis.
struct GridGeometry {
  int dim = 1;
  double extent = 1.0;
  std::size_t n_cells = 1;

  double spacing() const { return extent / static_cast<double>(n_cells); }
};

/// Open ball {y : dist(center, y) < radius}.
struct Ball {
  std::size_t center = 0;
  double radius = 0.0;
};

/// Finite quasi-metric measure space. Points are identified by index; the
/// distance is either an explicit matrix or computed from coordinates.
class PointCloudSpace {
 public:
  /// Cell centers of a regular grid with the sup metric and uniform masses
  /// (spacing^dim). Point ids run with the last axis fastest.
  static PointCloudSpace euclidean_grid(int dim, double extent, std::size_t n_cells);

  static PointCloudSpace from_points(std::vector<std::vector<double>> points,
                                     std::vector<double> masses, Metric metric,
                                     double quasi_K0 = 1.0);

  /// Row-major n*n distance matrix.
  static PointCloudSpace from_matrix(std::vector<double> dist, std::vector<double> masses,
                                     double quasi_K0);

  std::size_t size() const { return masses_.size(); }
  double dist(std::size_t i, std::size_t j) const;
  double mass(std::size_t i) const { return masses_[i]; }
  double measure(std::span<const std::size_t> ids) const;
  double total_measure() const;
  double quasi_K0() const { return quasi_K0_; }
  SpaceKind kind() const { return grid_ ? SpaceKind::euclidean_grid : SpaceKind::general; }
  Metric metric() const { return metric_; }
  int dim() const { return dim_; }
  std::span<const double> coords(std::size_t i) const;
  const std::optional<GridGeometry>& grid_geometry() const { return grid_; }

  /// Ids with dist(center, id) < radius, ascending.
  std::vector<std::size_t> ball_members(const Ball& ball) const;
  /// Largest pairwise distance inside the set (0 for fewer than two points).
  double diameter(std::span<const std::size_t> ids) const;
  double diameter() const;

 private:
  PointCloudSpace() = default;
  void check_values() const;

  std::vector<double> masses_;
  std::vector<double> matrix_;  // used when metric_ == matrix
  std::vector<double> coords_;  // size() * dim_
  std::vector<long> grid_index_;  // size() * dim_, grid kind only
  Metric metric_ = Metric::matrix;
  int dim_ = 0;
  double quasi_K0_ = 1.0;
  std::optional<GridGeometry> grid_;
};

struct ValidationReport {
  double min_K0 = 1.0;
  bool is_symmetric = true;
  bool declared_K0_ok = true;
};

/// Exhaustive triple scan for the smallest admissible quasi-triangle constant.
ValidationReport validate_space(const PointCloudSpace& space);

/// Largest observed mu(B(x,2r)) / mu(B(x,r)) over the sampled centers and
/// radii. A lower bound for the doubling constant of the space.
double doubling_constant(const PointCloudSpace& space, std::span<const std::size_t> centers,
                         std::span<const double> radii);

struct VitaliCover {
  std::vector<std::size_t> selected;  // indices into the input list
  double dilation = 5.0;              // 5 K0^2
};

/// Greedy largest-radius-first selection of pairwise disjoint balls; ties go
/// to the lower center id, then to the earlier input position.
VitaliCover vitali_cover(const PointCloudSpace& space, std::span<const Ball> balls);

struct GeodesicChain {
  std::vector<std::size_t> points;  // x_0 = x, ..., x_N = y
  std::vector<Ball> links;          // D_0, ..., D_{N-1}
  double step = 0.0;                // s = r / (2 K0 Ktilde)
  double dilation = 4.0;            // Lambda = 4 K0^2

  std::size_t length() const { return links.size(); }
};

/// Chain of points from x to y whose consecutive radius-r balls overlap in a
/// link ball D_i with B(x_i,r) u B(x_{i+1},r) inside Lambda * D_i. The chain is
/// a shortest monotone path: each hop moves at most Ktilde*s and gets at least
/// s closer to y. Throws NoChain when the point set has no such path.
GeodesicChain geodesic_chain(const PointCloudSpace& space, std::size_t x, std::size_t y,
                             double r, double Ktilde = 1.0);

}  // namespace parweight
