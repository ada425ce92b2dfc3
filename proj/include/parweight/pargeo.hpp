#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "parweight/dyadic.hpp"
#include "parweight/space.hpp"

namespace parweight {

/// Half-open range of time-cell indices [begin, end). May reach outside the
/// grid; callers check with SpaceTimeGrid::contains.
struct TimeSpan {
  long begin = 0;
  long end = 0;

  long size() const { return end > begin ? end - begin : 0; }
  bool empty() const { return end <= begin; }
};

class SpaceTimeGrid {
 public:
  SpaceTimeGrid(std::shared_ptr<const PointCloudSpace> space, double t0, double dt, std::size_t nt,
                double p);

  const PointCloudSpace& space() const { return *space_; }
  const std::shared_ptr<const PointCloudSpace>& space_ptr() const { return space_; }
  double t0() const { return t0_; }
  double dt() const { return dt_; }
  std::size_t nt() const { return nt_; }
  double p() const { return p_; }
  std::size_t n_points() const { return space_->size(); }
  std::size_t n_cells() const { return space_->size() * nt_; }
  std::size_t cell(std::size_t i, long s) const { return i * nt_ + static_cast<std::size_t>(s); }
  double time_center(long s) const { return t0_ + (static_cast<double>(s) + 0.5) * dt_; }
  double time_edge(long s) const { return t0_ + static_cast<double>(s) * dt_; }
  double cell_measure(std::size_t i) const { return space_->mass(i) * dt_; }
  bool contains(const TimeSpan& span) const {
    return span.begin >= 0 && span.end <= static_cast<long>(nt_);
  }

  /// Cells whose centers lie in [a, b), both given in units of dt from t0.
  static TimeSpan cells_in_steps(double a, double b);
  /// Same for the open interval (a, b).
  static TimeSpan cells_in_open_steps(double a, double b);

 private:
  std::shared_ptr<const PointCloudSpace> space_;
  double t0_, dt_;
  std::size_t nt_;
  double p_;
};

/// True when x is within 1e-9 of an integer.
bool is_integral(double x);

enum class Shape { cylinder, rectangle };
enum class Part { full, lower, upper };
enum class Orientation { plus, minus };

/// Cylinder R(x, t, l) or rectangle P(tau, k, alpha, t), centered at the time
/// edge t = t0 + t_index*dt with half-length l^p = L_steps*dt.
struct ParabolicBox {
  Shape shape = Shape::cylinder;
  std::size_t x = 0;  // cylinder center point
  double l = 0.0;     // cylinder radius or cube edge
  CubeRef cube;       // rectangle only
  long t_index = 0;
  double L_steps = 0.0;
  double gamma = 0.0;
  std::shared_ptr<const std::vector<std::size_t>> members;
};

ParabolicBox make_cylinder(const SpaceTimeGrid& grid, std::size_t x, double L_steps, long t_index,
                           double gamma);
ParabolicBox make_rectangle(const SpaceTimeGrid& grid, const AdjacentSystem& adj, CubeRef cube,
                            long t_index, double gamma);

/// Lower part [t-L, t-gL), upper part [t+gL, t+L), full (t-L, t+L), each
/// translated by shift_steps*dt.
TimeSpan part_span(const ParabolicBox& box, Part part, double gamma, double shift_steps = 0.0);
inline TimeSpan part_span(const ParabolicBox& box, Part part) {
  return part_span(box, part, box.gamma);
}

/// Product region: spatial point set times a run of time cells.
struct Region {
  std::vector<std::size_t> points;  // ascending
  TimeSpan span;
};

double region_measure(const SpaceTimeGrid& grid, const Region& region);

/// Throws InadmissibleBox for an empty spatial or temporal part or a part
/// reaching outside the grid.
Region box_region(const SpaceTimeGrid& grid, const ParabolicBox& box, Part part, double gamma,
                  double shift_steps = 0.0);
inline Region box_region(const SpaceTimeGrid& grid, const ParabolicBox& box, Part part) {
  return box_region(grid, box, part, box.gamma);
}

/// Correctly rounded sum of the inputs (exact accumulation, one rounding).
double exact_sum(std::span<const double> xs);

/// Per-point prefix sums kept as exact fixed-point integers, so that any
/// time-run sum comes back correctly rounded, identical to exact_sum.
class PrefixTable {
 public:
  PrefixTable(std::size_t n_points, std::size_t nt, std::span<const double> values);
  double span_sum(std::size_t point, TimeSpan span) const;

 private:
  struct Row {
    std::size_t offset = 0;  // first word of prefix 0
    std::size_t words = 0;
    int lsb = 0;  // exponent of the unit in the last place
  };
  std::size_t nt_;
  std::vector<Row> rows_;
  std::vector<std::uint64_t> data_;
};

/// Values per cell (id = point*nt + time) with a prefix table built once.
class Field {
 public:
  Field(const SpaceTimeGrid& grid, std::vector<double> values);

  const std::vector<double>& values() const { return values_; }
  double operator[](std::size_t cell) const { return values_[cell]; }
  std::size_t size() const { return values_.size(); }
  double span_sum(std::size_t point, TimeSpan span) const { return table_.span_sum(point, span); }

 private:
  std::vector<double> values_;
  PrefixTable table_;
};

/// Averages and integrals over product regions. Per-point time sums are
/// correctly rounded, then combined over points in ascending order, so the
/// fast and naive paths agree bit for bit.
double region_average(const SpaceTimeGrid& grid, const Field& f, const Region& region);
double region_average_naive(const SpaceTimeGrid& grid, std::span<const double> values,
                            const Region& region);
double region_integral(const SpaceTimeGrid& grid, const Field& f, const Region& region);

/// Average over a box part without materializing the Region.
double part_average(const SpaceTimeGrid& grid, const Field& f, const ParabolicBox& box, Part part,
                    double gamma, double shift_steps = 0.0);

enum class BoxMode { rectangle, cylinder };

struct FamilySpec {
  BoxMode mode = BoxMode::rectangle;
  std::vector<int> levels;  // rectangle; empty = every aligned level that fits
  std::vector<long> ladder;  // cylinder l^p in dt steps; empty = aligned powers of two
  std::size_t center_stride = 1;
  std::size_t time_stride = 1;
  std::size_t max_boxes = 20000;
};

struct BoxFamily {
  BoxMode mode = BoxMode::rectangle;
  std::vector<ParabolicBox> boxes;
  std::size_t n_candidates = 0;  // before subsampling
};

/// Full boxes inside the grid whose parts are aligned for every lag given.
/// Boxes carry lags.front() as their own lag.
BoxFamily build_family(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                       const FamilySpec& spec, std::span<const double> lags);

/// Time steps l^p/dt of a rectangle at level k.
double rectangle_L_steps(const SpaceTimeGrid& grid, const AdjacentSystem& adj, int k);

}  // namespace parweight
