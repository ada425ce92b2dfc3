#include "parweight/space.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <string>

#include "parweight/error.hpp"

namespace parweight {

PointCloudSpace PointCloudSpace::euclidean_grid(int dim, double extent, std::size_t n_cells) {
  if (dim < 1 || dim > 3) throw Error(ErrorKind::InvalidSpace, "grid dim must be 1, 2 or 3");
  if (!(extent > 0.0) || n_cells == 0)
    throw Error(ErrorKind::InvalidSpace, "grid needs positive extent and n_cells");

  PointCloudSpace s;
  s.grid_ = GridGeometry{dim, extent, n_cells};
  s.metric_ = Metric::euclidean_sup;
  s.dim_ = dim;
  s.quasi_K0_ = 1.0;

  std::size_t n = 1;
  for (int d = 0; d < dim; ++d) n *= n_cells;
  const double h = extent / static_cast<double>(n_cells);
  s.masses_.assign(n, std::pow(h, dim));
  s.coords_.resize(n * dim);
  s.grid_index_.resize(n * dim);
  for (std::size_t id = 0; id < n; ++id) {
    std::size_t rest = id;
    for (int d = dim - 1; d >= 0; --d) {
      const std::size_t k = rest % n_cells;
      rest /= n_cells;
      s.grid_index_[id * dim + d] = static_cast<long>(k);
      s.coords_[id * dim + d] = (static_cast<double>(k) + 0.5) * h;
    }
  }
  return s;
}

PointCloudSpace PointCloudSpace::from_points(std::vector<std::vector<double>> points,
                                             std::vector<double> masses, Metric metric,
                                             double quasi_K0) {
  if (points.empty()) throw Error(ErrorKind::InvalidSpace, "space needs at least one point");
  if (metric == Metric::matrix)
    throw Error(ErrorKind::InvalidArgument, "from_points needs a coordinate metric");
  if (masses.size() != points.size())
    throw Error(ErrorKind::InvalidSpace, "masses and points differ in length");

  PointCloudSpace s;
  s.metric_ = metric;
  s.dim_ = static_cast<int>(points.front().size());
  s.quasi_K0_ = quasi_K0;
  s.masses_ = std::move(masses);
  s.coords_.reserve(points.size() * s.dim_);
  for (const auto& p : points) {
    if (static_cast<int>(p.size()) != s.dim_)
      throw Error(ErrorKind::InvalidSpace, "points have inconsistent dimension");
    s.coords_.insert(s.coords_.end(), p.begin(), p.end());
  }
  s.check_values();
  return s;
}

PointCloudSpace PointCloudSpace::from_matrix(std::vector<double> dist, std::vector<double> masses,
                                             double quasi_K0) {
  const std::size_t n = masses.size();
  if (n == 0) throw Error(ErrorKind::InvalidSpace, "space needs at least one point");
  if (dist.size() != n * n)
    throw Error(ErrorKind::InvalidSpace, "distance matrix is not n x n");
  PointCloudSpace s;
  s.metric_ = Metric::matrix;
  s.quasi_K0_ = quasi_K0;
  s.masses_ = std::move(masses);
  s.matrix_ = std::move(dist);
  s.check_values();
  return s;
}

void PointCloudSpace::check_values() const {
  if (!(quasi_K0_ >= 1.0)) throw Error(ErrorKind::InvalidSpace, "K0 must be >= 1");
  for (std::size_t i = 0; i < masses_.size(); ++i) {
    if (!(masses_[i] > 0.0) || !std::isfinite(masses_[i]))
      throw Error(ErrorKind::InvalidSpace, "nonpositive mass at point " + std::to_string(i));
  }
  for (double c : coords_) {
    if (!std::isfinite(c)) throw Error(ErrorKind::InvalidSpace, "non-finite coordinate");
  }
  const std::size_t n = masses_.size();
  for (std::size_t i = 0; i < matrix_.size(); ++i) {
    if (!(matrix_[i] >= 0.0) || !std::isfinite(matrix_[i]))
      throw Error(ErrorKind::InvalidSpace, "negative or non-finite distance at (" +
                                               std::to_string(i / n) + "," +
                                               std::to_string(i % n) + ")");
  }
}

double PointCloudSpace::dist(std::size_t i, std::size_t j) const {
  switch (metric_) {
    case Metric::matrix:
      return matrix_[i * size() + j];
    case Metric::euclidean_sup: {
      double m = 0.0;
      if (grid_) {
        long steps = 0;
        for (int d = 0; d < dim_; ++d)
          steps = std::max(steps, std::labs(grid_index_[i * dim_ + d] - grid_index_[j * dim_ + d]));
        return static_cast<double>(steps) * grid_->spacing();
      }
      for (int d = 0; d < dim_; ++d)
        m = std::max(m, std::fabs(coords_[i * dim_ + d] - coords_[j * dim_ + d]));
      return m;
    }
    case Metric::euclidean_l2: {
      double acc = 0.0;
      for (int d = 0; d < dim_; ++d) {
        const double diff = coords_[i * dim_ + d] - coords_[j * dim_ + d];
        acc += diff * diff;
      }
      return std::sqrt(acc);
    }
  }
  return 0.0;
}

double PointCloudSpace::measure(std::span<const std::size_t> ids) const {
  double m = 0.0;
  for (std::size_t id : ids) m += masses_[id];
  return m;
}

double PointCloudSpace::total_measure() const {
  return std::accumulate(masses_.begin(), masses_.end(), 0.0);
}

std::span<const double> PointCloudSpace::coords(std::size_t i) const {
  if (dim_ == 0) return {};
  return std::span<const double>(coords_).subspan(i * dim_, dim_);
}

std::vector<std::size_t> PointCloudSpace::ball_members(const Ball& ball) const {
  std::vector<std::size_t> out;
  for (std::size_t j = 0; j < size(); ++j)
    if (dist(ball.center, j) < ball.radius) out.push_back(j);
  return out;
}

double PointCloudSpace::diameter(std::span<const std::size_t> ids) const {
  double d = 0.0;
  for (std::size_t a = 0; a < ids.size(); ++a)
    for (std::size_t b = a + 1; b < ids.size(); ++b) d = std::max(d, dist(ids[a], ids[b]));
  return d;
}

double PointCloudSpace::diameter() const {
  std::vector<std::size_t> all(size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return diameter(all);
}

ValidationReport validate_space(const PointCloudSpace& space) {
  const std::size_t n = space.size();
  if (n == 0) throw Error(ErrorKind::InvalidSpace, "empty space");
  ValidationReport report;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(space.mass(i) > 0.0)) throw Error(ErrorKind::InvalidSpace, "nonpositive mass");
    for (std::size_t j = 0; j < n; ++j) {
      const double dij = space.dist(i, j);
      if (dij < 0.0) throw Error(ErrorKind::InvalidSpace, "negative distance");
      if (dij != space.dist(j, i) || (i == j && dij != 0.0)) report.is_symmetric = false;
    }
  }

  double worst = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double dij = space.dist(i, j);
      for (std::size_t k = 0; k < n; ++k) {
        const double via = space.dist(i, k) + space.dist(k, j);
        const double ratio = via == 0.0 ? (dij == 0.0 ? 1.0 : std::numeric_limits<double>::infinity())
                                        : dij / via;
        worst = std::max(worst, ratio);
      }
    }
  }
  report.min_K0 = worst;
  // Rounding in d(i,k) + d(k,j) can push a true metric a few ulps above 1.
  report.declared_K0_ok = space.quasi_K0() >= worst * (1.0 - 1e-12);
  return report;
}

double doubling_constant(const PointCloudSpace& space, std::span<const std::size_t> centers,
                         std::span<const double> radii) {
  if (radii.empty()) throw Error(ErrorKind::InvalidArgument, "empty radius ladder");
  double worst = 1.0;
  for (double r : radii) {
    if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "radii must be positive");
    for (std::size_t x : centers) {
      const double inner = space.measure(space.ball_members({x, r}));
      const double outer = space.measure(space.ball_members({x, 2.0 * r}));
      worst = std::max(worst, outer / inner);
    }
  }
  return worst;
}

VitaliCover vitali_cover(const PointCloudSpace& space, std::span<const Ball> balls) {
  VitaliCover cover;
  cover.dilation = 5.0 * space.quasi_K0() * space.quasi_K0();
  std::vector<std::size_t> order(balls.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (balls[a].radius != balls[b].radius) return balls[a].radius > balls[b].radius;
    return balls[a].center < balls[b].center;
  });

  std::vector<char> taken(space.size(), 0);
  for (std::size_t idx : order) {
    const auto members = space.ball_members(balls[idx]);
    const bool disjoint =
        std::none_of(members.begin(), members.end(), [&](std::size_t m) { return taken[m] != 0; });
    if (!disjoint) continue;
    for (std::size_t m : members) taken[m] = 1;
    cover.selected.push_back(idx);
  }
  return cover;
}

GeodesicChain geodesic_chain(const PointCloudSpace& space, std::size_t x, std::size_t y, double r,
                             double Ktilde) {
  if (!(r > 0.0)) throw Error(ErrorKind::InvalidArgument, "chain radius must be positive");
  if (!(Ktilde >= 1.0)) throw Error(ErrorKind::InvalidArgument, "Ktilde must be >= 1");
  const std::size_t n = space.size();
  if (x >= n || y >= n) throw Error(ErrorKind::InvalidArgument, "chain endpoint out of range");

  const double K0 = space.quasi_K0();
  GeodesicChain chain;
  chain.step = r / (2.0 * K0 * Ktilde);
  chain.dilation = 4.0 * K0 * K0;
  const double link_radius = r / (2.0 * K0);

  if (space.dist(x, y) < chain.step) {
    chain.points = {x, y};
    chain.links = {Ball{x, link_radius}};
    return chain;
  }

  // Breadth-first search over admissible hops. Every hop strictly decreases the
  // distance to y, so the hop graph is acyclic and BFS yields a shortest chain.
  const double s = chain.step;
  const double hop = Ktilde * s;
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::vector<std::size_t> parent(n, none);
  std::deque<std::size_t> queue{x};
  parent[x] = x;
  while (!queue.empty() && parent[y] == none) {
    const std::size_t a = queue.front();
    queue.pop_front();
    const double remaining = space.dist(a, y);
    for (std::size_t b = 0; b < n; ++b) {
      if (parent[b] != none) continue;
      if (space.dist(a, b) <= hop && space.dist(b, y) <= remaining - s) {
        parent[b] = a;
        queue.push_back(b);
      }
    }
  }
  if (parent[y] == none)
    throw Error(ErrorKind::NoChain, "no monotone chain with step " + std::to_string(s) +
                                        " between points " + std::to_string(x) + " and " +
                                        std::to_string(y));

  for (std::size_t at = y; at != x; at = parent[at]) chain.points.push_back(at);
  chain.points.push_back(x);
  std::reverse(chain.points.begin(), chain.points.end());
  for (std::size_t i = 0; i + 1 < chain.points.size(); ++i)
    chain.links.push_back(Ball{chain.points[i + 1], link_radius});
  return chain;
}

}  // namespace parweight
