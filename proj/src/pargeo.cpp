#include "parweight/pargeo.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "parweight/error.hpp"

namespace parweight {

SpaceTimeGrid::SpaceTimeGrid(std::shared_ptr<const PointCloudSpace> space, double t0, double dt,
                             std::size_t nt, double p)
    : space_(std::move(space)), t0_(t0), dt_(dt), nt_(nt), p_(p) {
  if (!space_ || space_->size() == 0) throw Error(ErrorKind::InvalidArgument, "grid needs a space");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
  if (nt == 0) throw Error(ErrorKind::InvalidArgument, "nt must be positive");
  if (!(p > 1.0) || !std::isfinite(p)) throw Error(ErrorKind::InvalidArgument, "p must exceed 1");
  if (!std::isfinite(t0)) throw Error(ErrorKind::InvalidArgument, "t0 must be finite");
}

bool is_integral(double x) { return std::fabs(x - std::round(x)) < 1e-9; }

namespace {

double snap(double x) { return is_integral(x) ? std::round(x) : x; }

}  // namespace

TimeSpan SpaceTimeGrid::cells_in_steps(double a, double b) {
  a = snap(a);
  b = snap(b);
  return {static_cast<long>(std::ceil(a - 0.5)), static_cast<long>(std::ceil(b - 0.5))};
}

TimeSpan SpaceTimeGrid::cells_in_open_steps(double a, double b) {
  a = snap(a);
  b = snap(b);
  return {static_cast<long>(std::floor(a - 0.5)) + 1, static_cast<long>(std::ceil(b - 0.5))};
}

ParabolicBox make_cylinder(const SpaceTimeGrid& grid, std::size_t x, double L_steps, long t_index,
                           double gamma) {
  if (!(L_steps > 0.0)) throw Error(ErrorKind::InadmissibleBox, "cylinder needs l^p > 0");
  ParabolicBox box;
  box.shape = Shape::cylinder;
  box.x = x;
  box.l = std::pow(L_steps * grid.dt(), 1.0 / grid.p());
  box.t_index = t_index;
  box.L_steps = L_steps;
  box.gamma = gamma;
  box.members = std::make_shared<const std::vector<std::size_t>>(
      grid.space().ball_members({x, box.l}));
  return box;
}

double rectangle_L_steps(const SpaceTimeGrid& grid, const AdjacentSystem& adj, int k) {
  return std::pow(adj.edge(k), grid.p()) / grid.dt();
}

ParabolicBox make_rectangle(const SpaceTimeGrid& grid, const AdjacentSystem& adj, CubeRef cube,
                            long t_index, double gamma) {
  ParabolicBox box;
  box.shape = Shape::rectangle;
  box.cube = cube;
  box.l = adj.edge(cube.k);
  box.t_index = t_index;
  box.L_steps = rectangle_L_steps(grid, adj, cube.k);
  box.gamma = gamma;
  const auto& c = adj.grids.at(cube.tau).cube(cube.k, cube.alpha);
  box.x = c.center;
  box.members = std::make_shared<const std::vector<std::size_t>>(c.members);
  return box;
}

TimeSpan part_span(const ParabolicBox& box, Part part, double gamma, double shift_steps) {
  const double c = static_cast<double>(box.t_index) + shift_steps;
  const double m = box.L_steps;
  switch (part) {
    case Part::lower:
      return SpaceTimeGrid::cells_in_steps(c - m, c - gamma * m);
    case Part::upper:
      return SpaceTimeGrid::cells_in_steps(c + gamma * m, c + m);
    case Part::full:
      return SpaceTimeGrid::cells_in_open_steps(c - m, c + m);
  }
  return {};
}

double region_measure(const SpaceTimeGrid& grid, const Region& region) {
  double mu = 0.0;
  for (std::size_t i : region.points) mu += grid.space().mass(i);
  return mu * grid.dt() * static_cast<double>(region.span.size());
}

Region box_region(const SpaceTimeGrid& grid, const ParabolicBox& box, Part part, double gamma,
                  double shift_steps) {
  Region r;
  r.span = part_span(box, part, gamma, shift_steps);
  if (!box.members || box.members->empty())
    throw Error(ErrorKind::InadmissibleBox, "empty spatial part");
  if (r.span.empty()) throw Error(ErrorKind::InadmissibleBox, "empty temporal part");
  if (!grid.contains(r.span)) throw Error(ErrorKind::InadmissibleBox, "part leaves the time grid");
  r.points = *box.members;
  return r;
}

double exact_sum(std::span<const double> xs) {
  // Shewchuk partials with a correctly rounded final sum.
  std::vector<double> partials;
  for (double x : xs) {
    std::size_t i = 0;
    for (double y : partials) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials[i++] = lo;
      x = hi;
    }
    partials.resize(i);
    partials.push_back(x);
  }
  std::size_t n = partials.size();
  if (n == 0) return 0.0;
  double hi = partials[--n];
  double lo = 0.0;
  while (n > 0) {
    const double x = hi;
    const double y = partials[--n];
    hi = x + y;
    const double yr = hi - x;
    lo = y - yr;
    if (lo != 0.0) break;
  }
  if (n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0))) {
    const double y = lo * 2.0;
    const double x = hi + y;
    if (y == x - hi) hi = x;
  }
  return hi;
}

namespace {

void add_shifted(std::uint64_t* acc, std::size_t words, std::uint64_t mant, int shift, bool negative) {
  const std::size_t w = static_cast<std::size_t>(shift / 64);
  const int b = shift % 64;
  std::uint64_t lo = mant << b;
  std::uint64_t hi = b ? (mant >> (64 - b)) : 0;
  if (!negative) {
    std::uint64_t carry = 0;
    for (std::size_t k = w; k < words; ++k) {
      const std::uint64_t addend = (k == w) ? lo : (k == w + 1 ? hi : 0);
      const std::uint64_t s1 = acc[k] + addend;
      const std::uint64_t c1 = s1 < addend;
      const std::uint64_t s2 = s1 + carry;
      const std::uint64_t c2 = s2 < carry;
      acc[k] = s2;
      carry = c1 | c2;
      if (k > w && carry == 0) break;
    }
  } else {
    std::uint64_t borrow = 0;
    for (std::size_t k = w; k < words; ++k) {
      const std::uint64_t sub = (k == w) ? lo : (k == w + 1 ? hi : 0);
      const std::uint64_t d1 = acc[k] - sub;
      const std::uint64_t b1 = acc[k] < sub;
      const std::uint64_t d2 = d1 - borrow;
      const std::uint64_t b2 = d1 < borrow;
      acc[k] = d2;
      borrow = b1 | b2;
      if (k > w && borrow == 0) break;
    }
  }
}

double to_double_rounded(std::uint64_t* v, std::size_t words, int lsb) {
  const bool negative = (v[words - 1] >> 63) != 0;
  if (negative) {
    std::uint64_t carry = 1;
    for (std::size_t k = 0; k < words; ++k) {
      v[k] = ~v[k] + carry;
      carry = (carry && v[k] == 0) ? 1 : 0;
    }
  }
  std::size_t top = words;
  while (top > 0 && v[top - 1] == 0) --top;
  if (top == 0) return 0.0;
  const int H = static_cast<int>(64 * (top - 1)) + 63 - std::countl_zero(v[top - 1]);
  double result;
  if (H <= 52) {
    result = std::ldexp(static_cast<double>(v[0]), lsb);
  } else {
    const int pos = H - 52;
    const std::size_t w = static_cast<std::size_t>(pos / 64);
    const int b = pos % 64;
    std::uint64_t mant = v[w] >> b;
    if (b != 0 && w + 1 < words) mant |= v[w + 1] << (64 - b);
    mant &= (std::uint64_t{1} << 53) - 1;
    const int rpos = pos - 1;
    const bool round_bit = (v[rpos / 64] >> (rpos % 64)) & 1U;
    bool sticky = false;
    if (rpos > 0) {
      const std::size_t rw = static_cast<std::size_t>(rpos / 64);
      const int rb = rpos % 64;
      if (rb != 0 && (v[rw] & ((std::uint64_t{1} << rb) - 1)) != 0) sticky = true;
      for (std::size_t k = 0; k < rw && !sticky; ++k) sticky = v[k] != 0;
    }
    if (round_bit && (sticky || (mant & 1U))) ++mant;
    result = std::ldexp(static_cast<double>(mant), pos + lsb);
  }
  return negative ? -result : result;
}

}  // namespace

PrefixTable::PrefixTable(std::size_t n_points, std::size_t nt, std::span<const double> values)
    : nt_(nt), rows_(n_points) {
  if (values.size() != n_points * nt)
    throw Error(ErrorKind::InvalidArgument, "field size does not match the grid");
  int nt_bits = 1;
  while ((std::size_t{1} << nt_bits) <= nt) ++nt_bits;

  std::size_t total = 0;
  for (std::size_t i = 0; i < n_points; ++i) {
    int emin = std::numeric_limits<int>::max();
    int emax = std::numeric_limits<int>::min();
    for (std::size_t s = 0; s < nt; ++s) {
      const double v = values[i * nt + s];
      if (!std::isfinite(v)) throw Error(ErrorKind::InvalidArgument, "non-finite field value");
      if (v == 0.0) continue;
      int e = 0;
      std::frexp(v, &e);
      emin = std::min(emin, e - 53);
      emax = std::max(emax, e);
    }
    Row& row = rows_[i];
    if (emax == std::numeric_limits<int>::min()) {
      row.words = 0;
      continue;
    }
    row.lsb = emin;
    const int bits = (emax - emin) + nt_bits + 1;
    row.words = static_cast<std::size_t>(bits / 64 + 1);
    row.offset = total;
    total += row.words * (nt + 1);
  }

  data_.assign(total, 0);
  for (std::size_t i = 0; i < n_points; ++i) {
    const Row& row = rows_[i];
    if (row.words == 0) continue;
    for (std::size_t s = 0; s < nt; ++s) {
      std::uint64_t* prev = &data_[row.offset + s * row.words];
      std::uint64_t* next = prev + row.words;
      std::copy(prev, prev + row.words, next);
      const double v = values[i * nt + s];
      if (v == 0.0) continue;
      int e = 0;
      const double f = std::frexp(std::fabs(v), &e);
      const auto mant = static_cast<std::uint64_t>(std::ldexp(f, 53));
      add_shifted(next, row.words, mant, (e - 53) - row.lsb, v < 0.0);
    }
  }
}

double PrefixTable::span_sum(std::size_t point, TimeSpan span) const {
  if (span.begin < 0 || span.end > static_cast<long>(nt_) || span.begin > span.end)
    throw Error(ErrorKind::InvalidArgument, "time span outside the prefix table");
  const Row& row = rows_[point];
  if (row.words == 0 || span.empty()) return 0.0;
  const std::uint64_t* a = &data_[row.offset + static_cast<std::size_t>(span.begin) * row.words];
  const std::uint64_t* b = &data_[row.offset + static_cast<std::size_t>(span.end) * row.words];
  std::array<std::uint64_t, 16> small{};
  std::vector<std::uint64_t> large;
  std::uint64_t* diff = small.data();
  if (row.words > small.size()) {
    large.resize(row.words);
    diff = large.data();
  }
  std::uint64_t borrow = 0;
  for (std::size_t k = 0; k < row.words; ++k) {
    const std::uint64_t d1 = b[k] - a[k];
    const std::uint64_t b1 = b[k] < a[k];
    const std::uint64_t d2 = d1 - borrow;
    const std::uint64_t b2 = d1 < borrow;
    diff[k] = d2;
    borrow = b1 | b2;
  }
  return to_double_rounded(diff, row.words, row.lsb);
}

Field::Field(const SpaceTimeGrid& grid, std::vector<double> values)
    : values_(std::move(values)), table_(grid.n_points(), grid.nt(), values_) {}

namespace {

template <class SpanSum>
double combine(const SpaceTimeGrid& grid, std::span<const std::size_t> points, TimeSpan span,
               SpanSum&& sum, bool average) {
  if (points.empty() || span.empty()) throw Error(ErrorKind::EmptyRegion, "empty region");
  if (!grid.contains(span)) throw Error(ErrorKind::InadmissibleBox, "region leaves the time grid");
  double num = 0.0;
  double mass = 0.0;
  for (std::size_t i : points) {
    const double mu = grid.space().mass(i);
    num += mu * sum(i);
    mass += mu;
  }
  if (average) return num / (mass * static_cast<double>(span.size()));
  return num * grid.dt();
}

}  // namespace

double region_average(const SpaceTimeGrid& grid, const Field& f, const Region& region) {
  return combine(grid, region.points, region.span,
                 [&](std::size_t i) { return f.span_sum(i, region.span); }, true);
}

double region_integral(const SpaceTimeGrid& grid, const Field& f, const Region& region) {
  return combine(grid, region.points, region.span,
                 [&](std::size_t i) { return f.span_sum(i, region.span); }, false);
}

double region_average_naive(const SpaceTimeGrid& grid, std::span<const double> values,
                            const Region& region) {
  const std::size_t nt = grid.nt();
  return combine(
      grid, region.points, region.span,
      [&](std::size_t i) {
        return exact_sum(values.subspan(i * nt + static_cast<std::size_t>(region.span.begin),
                                        static_cast<std::size_t>(region.span.size())));
      },
      true);
}

double part_average(const SpaceTimeGrid& grid, const Field& f, const ParabolicBox& box, Part part,
                    double gamma, double shift_steps) {
  const TimeSpan span = part_span(box, part, gamma, shift_steps);
  return combine(grid, *box.members, span, [&](std::size_t i) { return f.span_sum(i, span); },
                 true);
}

namespace {

bool lags_aligned(double m, std::span<const double> lags) {
  if (!is_integral(m)) return false;
  return std::all_of(lags.begin(), lags.end(), [&](double g) { return is_integral(g * m); });
}

}  // namespace

BoxFamily build_family(const SpaceTimeGrid& grid, const AdjacentSystem* adj,
                       const FamilySpec& spec, std::span<const double> lags) {
  if (lags.empty()) throw Error(ErrorKind::InvalidArgument, "family needs at least one lag");
  for (double g : lags)
    if (!(g >= 0.0 && g < 1.0)) throw Error(ErrorKind::InvalidArgument, "lag must lie in [0,1)");
  if (spec.center_stride == 0 || spec.time_stride == 0 || spec.max_boxes == 0)
    throw Error(ErrorKind::InvalidArgument, "family strides and cap must be positive");

  const long nt = static_cast<long>(grid.nt());
  BoxFamily fam;
  fam.mode = spec.mode;
  std::vector<ParabolicBox> all;

  auto add_centers = [&](const ParabolicBox& proto, long m) {
    for (long c = m; c + m <= nt; c += static_cast<long>(spec.time_stride)) {
      ParabolicBox b = proto;
      b.t_index = c;
      all.push_back(b);
    }
  };

  if (spec.mode == BoxMode::rectangle) {
    if (!adj) throw Error(ErrorKind::InvalidArgument, "rectangle family needs an adjacent system");
    std::vector<int> levels = spec.levels;
    if (levels.empty()) {
      for (int k = adj->k_min(); k <= adj->k_max(); ++k) {
        const double m = rectangle_L_steps(grid, *adj, k);
        if (lags_aligned(m, lags) && 2 * std::lround(m) <= nt) levels.push_back(k);
      }
    }
    for (int k : levels) {
      const double m = rectangle_L_steps(grid, *adj, k);
      if (!lags_aligned(m, lags))
        throw Error(ErrorKind::InvalidArgument, "level " + std::to_string(k) + " is not aligned");
      for (unsigned tau = 0; tau < adj->size(); ++tau) {
        const auto& lvl = adj->grids[tau].level(k);
        for (std::size_t a = 0; a < lvl.cubes.size(); ++a) {
          ParabolicBox proto = make_rectangle(grid, *adj, {tau, k, a}, 0, lags.front());
          add_centers(proto, std::lround(m));
        }
      }
    }
  } else {
    std::vector<long> ladder = spec.ladder;
    if (ladder.empty()) {
      for (long m = 1; 2 * m <= nt; m *= 2)
        if (lags_aligned(static_cast<double>(m), lags)) ladder.push_back(m);
    }
    for (long m : ladder) {
      if (m <= 0 || !lags_aligned(static_cast<double>(m), lags))
        throw Error(ErrorKind::InvalidArgument, "cylinder l^p = " + std::to_string(m) + " dt is not aligned");
      for (std::size_t x = 0; x < grid.n_points(); x += spec.center_stride) {
        ParabolicBox proto = make_cylinder(grid, x, static_cast<double>(m), 0, lags.front());
        add_centers(proto, m);
      }
    }
  }

  fam.n_candidates = all.size();
  if (all.empty()) throw Error(ErrorKind::EmptyFamily, "no aligned box fits the grid");
  const std::size_t stride = (all.size() + spec.max_boxes - 1) / spec.max_boxes;
  for (std::size_t i = 0; i < all.size(); i += stride) fam.boxes.push_back(std::move(all[i]));
  return fam;
}

}  // namespace parweight
