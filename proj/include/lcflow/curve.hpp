#pragma once

// Closed plane curves sampled at N nodes, with spectral geometry,
// arc-length resampling and a self-intersection test.
//
// Sign conventions: the inward normal is the unit tangent rotated by +90
// degrees. A counterclockwise circle then has k > 0, positive area and
// winding number +1.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "lcflow/fft.hpp"
#include "lcflow/periodic_calculus.hpp"

namespace lcflow {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }
inline Vec2 rotate90(Vec2 a) { return {-a.y, a.x}; }
inline cplx to_complex(Vec2 a) { return {a.x, a.y}; }
inline Vec2 to_vec2(cplx z) { return {z.real(), z.imag()}; }

inline constexpr std::size_t kMinNodes = 16;
inline constexpr double kMinLength = 1e-12;

namespace detail {

inline std::vector<cplx> to_complex(std::span<const Vec2> pts) {
  std::vector<cplx> z(pts.size());
  std::transform(pts.begin(), pts.end(), z.begin(), [](Vec2 p) { return lcflow::to_complex(p); });
  return z;
}

// Derivative of order m with respect to the index parameter u in [0, 1).
inline std::vector<cplx> derivative_u(std::span<const cplx> spectrum, int order) {
  const std::size_t n = spectrum.size();
  std::vector<cplx> work(n);
  for (std::size_t j = 0; j < n; ++j)
    work[j] = spectrum[j] * spectral_multiplier(j, n, 1.0, order);
  return ifft(work);
}

// Sum of exterior angles of the polygon, divided by 2 pi.
inline double polygon_turning(std::span<const Vec2> pts) {
  const std::size_t n = pts.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = pts[(i + n - 1) % n] - pts[(i + n - 2) % n];
    const Vec2 e1 = pts[i] - pts[(i + n - 1) % n];
    total += std::atan2(cross(e0, e1), dot(e0, e1));
  }
  return total / (2.0 * std::numbers::pi);
}

inline void validate_points(std::span<const Vec2> pts, std::size_t min_nodes) {
  if (pts.size() < min_nodes)
    throw std::invalid_argument("closed curve needs at least " + std::to_string(min_nodes) +
                                " nodes, got " + std::to_string(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (!std::isfinite(pts[i].x) || !std::isfinite(pts[i].y))
      throw std::invalid_argument("closed curve: non-finite coordinate at node " + std::to_string(i));
  }
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (norm(pts[(i + 1) % pts.size()] - pts[i]) <= 0.0)
      throw std::invalid_argument("closed curve: duplicated consecutive node at " + std::to_string(i));
  }
}

}  // namespace detail

/// N ordered nodes of a closed plane curve; index arithmetic is cyclic.
class ClosedCurve {
 public:
  explicit ClosedCurve(std::vector<Vec2> points) : points_(std::move(points)) {
    detail::validate_points(points_, kMinNodes);
    if (points_.size() % 2 != 0)
      throw std::invalid_argument("closed curve: node count must be even, got " +
                                  std::to_string(points_.size()));
    const auto spectrum = fft(detail::to_complex(points_));
    const auto du = detail::derivative_u(spectrum, 1);
    double speed_sum = 0.0;
    for (const auto& d : du) speed_sum += std::abs(d);
    length_ = speed_sum / static_cast<double>(points_.size());
    if (!(length_ >= kMinLength) || !std::isfinite(length_))
      throw std::invalid_argument("closed curve: degenerate length " + std::to_string(length_));
    winding_ = static_cast<int>(std::lround(detail::polygon_turning(points_)));
  }

  std::size_t size() const { return points_.size(); }
  const std::vector<Vec2>& points() const { return points_; }
  Vec2 operator[](std::size_t i) const { return points_[i % points_.size()]; }
  int winding() const { return winding_; }
  /// Length of the trigonometric interpolant through the nodes.
  double length() const { return length_; }
  double spacing() const { return length_ / static_cast<double>(points_.size()); }

  Vec2 centroid() const {
    Vec2 c{};
    for (auto p : points_) c = c + p;
    return (1.0 / static_cast<double>(points_.size())) * c;
  }

  std::vector<cplx> as_complex() const { return detail::to_complex(points_); }

 private:
  std::vector<Vec2> points_;
  double length_ = 0.0;
  int winding_ = 0;
};

/// Geometric quantities on a uniform arc-length grid.
struct GeometryCache {
  std::vector<Vec2> tangent;
  std::vector<Vec2> normal;
  PeriodicField k;
  /// k_s, k_ss, k_sss, k_ssss.
  std::array<PeriodicField, 4> k_derivs;
  double length = 0.0;
  double area = 0.0;
  double kbar = 0.0;
  int winding = 0;

  const PeriodicField& k_s() const { return k_derivs[0]; }
  const PeriodicField& k_ss() const { return k_derivs[1]; }
  const PeriodicField& k_sss() const { return k_derivs[2]; }
  const PeriodicField& k_ssss() const { return k_derivs[3]; }
  double spacing() const { return k.spacing(); }
  std::size_t size() const { return k.size(); }
};

/// Curvature and its arc-length derivatives by spectral differentiation of
/// the node positions. Assumes the nodes are equally spaced in arc length.
inline GeometryCache geometry(const ClosedCurve& curve) {
  const std::size_t n = curve.size();
  const double ds = curve.spacing();
  std::vector<double> xs(n), ys(n);
  for (std::size_t i = 0; i < n; ++i) {
    xs[i] = curve[i].x;
    ys[i] = curve[i].y;
  }
  const auto dx = derivatives(PeriodicField(std::move(xs), ds), 2, kSpectralNoiseFloor);
  const auto dy = derivatives(PeriodicField(std::move(ys), ds), 2, kSpectralNoiseFloor);

  GeometryCache g;
  g.tangent.resize(n);
  g.normal.resize(n);
  std::vector<double> k(n);
  double length = 0.0;
  double area = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 d1{dx[0][i], dy[0][i]};
    const Vec2 d2{dx[1][i], dy[1][i]};
    const double speed = norm(d1);
    g.tangent[i] = (1.0 / speed) * d1;
    g.normal[i] = rotate90(g.tangent[i]);
    k[i] = dot(d2, g.normal[i]) / (speed * speed);
    length += speed * ds;
    area += -0.5 * dot(curve[i], g.normal[i]) * speed * ds;
  }
  g.k = PeriodicField(std::move(k), ds);
  auto kd = derivatives(g.k, 4, kSpectralNoiseFloor);
  for (std::size_t m = 0; m < 4; ++m) g.k_derivs[m] = std::move(kd[m]);
  g.length = length;
  g.area = area;
  g.kbar = integral(g.k) / length;
  g.winding = curve.winding();
  return g;
}

// ---------------------------------------------------------------------------
// Resampling

namespace detail {

// Number of Taylor terms so that (pi m |delta|)^p / p! drops below 1e-17 for
// band-limited data with m samples per period.
inline int taylor_terms(double delta_max, std::size_t m) {
  const double x = std::numbers::pi * static_cast<double>(m) * delta_max;
  double term = 1.0;
  int p = 0;
  while (term > 1e-17 && p < 40) {
    ++p;
    term *= x / p;
  }
  return std::max(p, 4);
}

inline double taylor_eval(const std::vector<std::vector<double>>& d, std::size_t node, double delta,
                          std::size_t offset = 0) {
  double sum = 0.0;
  double w = 1.0;
  for (std::size_t p = offset; p < d.size(); ++p) {
    sum += d[p][node] * w;
    w *= delta / static_cast<double>(p - offset + 1);
  }
  return sum;
}

}  // namespace detail

/// Redistributes nodes to n equal arc-length steps along the trigonometric
/// interpolant of the input (in its index parametrisation). Node 0 is kept.
///
/// Arc length s(u) and position z(u) are evaluated by Taylor expansion about
/// the nearest input node, using spectrally computed derivatives there.
inline ClosedCurve resample_by_arclength(std::span<const Vec2> input, std::size_t n) {
  if (n < kMinNodes || n % 2 != 0)
    throw std::invalid_argument("resample: target node count must be even and >= 16");
  detail::validate_points(input, 4);
  const std::size_t m = input.size();
  const double dm = static_cast<double>(m);

  const auto spectrum = fft(detail::to_complex(input));
  const auto du = detail::derivative_u(spectrum, 1);
  std::vector<double> speed(m);
  for (std::size_t i = 0; i < m; ++i) speed[i] = std::abs(du[i]);
  const auto speed_spec = fft_real(speed);
  const double length = speed_spec[0].real() / dm;
  if (!(length >= kMinLength) || !std::isfinite(length))
    throw std::invalid_argument("resample: degenerate curve length " + std::to_string(length));

  // s(u_i) = L u_i + phi(u_i) - phi(0), phi the zero-mean antiderivative of speed - L.
  std::vector<cplx> anti(m);
  for (std::size_t j = 0; j < m; ++j) {
    const long w = wavenumber(j, m);
    const bool nyquist = m % 2 == 0 && w == -static_cast<long>(m / 2);
    anti[j] = (w == 0 || nyquist) ? cplx{} : speed_spec[j] / cplx{0.0, 2.0 * std::numbers::pi * w};
  }
  const auto phi = ifft(anti);
  std::vector<double> grid_s(m + 1);
  for (std::size_t i = 0; i < m; ++i) grid_s[i] = length * static_cast<double>(i) / dm + phi[i].real() - phi[0].real();
  grid_s[m] = length;

  // Linear first guesses, and the Taylor order they call for.
  std::vector<double> guess(n);
  std::vector<std::size_t> cells(n);
  std::size_t cell = 0;
  double delta_max = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double target = length * static_cast<double>(k) / static_cast<double>(n);
    while (cell + 1 < m && grid_s[cell + 1] <= target) ++cell;
    const double s_lo = grid_s[cell];
    const double s_hi = grid_s[cell + 1];
    const double frac = s_hi > s_lo ? std::clamp((target - s_lo) / (s_hi - s_lo), 0.0, 1.0) : 0.5;
    cells[k] = cell;
    guess[k] = frac;
    delta_max = std::max(delta_max, std::min(frac, 1.0 - frac) / dm);
  }
  const int terms = detail::taylor_terms(std::min(0.5 / dm, 2.0 * delta_max + 1e-3 / dm), m);

  // d^p s / du^p and d^p z / du^p at the nodes, p = 0..terms.
  std::vector<std::vector<double>> s_d(static_cast<std::size_t>(terms) + 1, std::vector<double>(m));
  std::vector<std::vector<double>> x_d(s_d), y_d(s_d);
  for (std::size_t i = 0; i < m; ++i) {
    s_d[0][i] = grid_s[i];
    x_d[0][i] = input[i].x;
    y_d[0][i] = input[i].y;
  }
  for (int p = 1; p <= terms; ++p) {
    const auto zp = detail::derivative_u(spectrum, p);
    std::vector<cplx> sp;
    if (p == 1) {
      sp.assign(speed.begin(), speed.end());
    } else {
      sp = detail::derivative_u(speed_spec, p - 1);
    }
    for (std::size_t i = 0; i < m; ++i) {
      s_d[p][i] = sp[i].real();
      x_d[p][i] = zp[i].real();
      y_d[p][i] = zp[i].imag();
    }
  }

  std::vector<Vec2> out(n);
  out[0] = input[0];
  for (std::size_t k = 1; k < n; ++k) {
    const double target = length * static_cast<double>(k) / static_cast<double>(n);
    const std::size_t c = cells[k];
    const bool right = guess[k] > 0.5;
    const std::size_t node = right ? (c + 1) % m : c;
    // Offsets are measured in u from the expansion node.
    double lo = right ? -1.0 / dm : 0.0;
    double hi = right ? 0.0 : 1.0 / dm;
    double delta = right ? (guess[k] - 1.0) / dm : guess[k] / dm;
    const double base = right && c + 1 == m ? length : 0.0;
    for (int it = 0; it < 60; ++it) {
      const double r = base + detail::taylor_eval(s_d, node, delta) - target;
      if (r > 0.0) hi = std::min(hi, delta); else lo = std::max(lo, delta);
      const double v = detail::taylor_eval(s_d, node, delta, 1);
      double next = v > 0.0 ? delta - r / v : 0.5 * (lo + hi);
      if (!(next >= lo && next <= hi)) next = 0.5 * (lo + hi);
      const double change = std::abs(next - delta);
      delta = next;
      if (change <= 1e-17 || hi - lo <= 1e-17) break;
    }
    out[k] = {detail::taylor_eval(x_d, node, delta), detail::taylor_eval(y_d, node, delta)};
  }
  return ClosedCurve(std::move(out));
}

inline ClosedCurve resample_by_arclength(const ClosedCurve& curve, std::size_t n) {
  return resample_by_arclength(std::span<const Vec2>(curve.points()), n);
}

// ---------------------------------------------------------------------------
// Embeddedness

namespace detail {

inline int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  return (v > 0.0) - (v < 0.0);
}

inline bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

// Closed segments [a, b] and [c, d] share at least one point.
inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const int o1 = orientation(a, b, c);
  const int o2 = orientation(a, b, d);
  const int o3 = orientation(c, d, a);
  const int o4 = orientation(c, d, b);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(a, b, c)) return true;
  if (o2 == 0 && on_segment(a, b, d)) return true;
  if (o3 == 0 && on_segment(c, d, a)) return true;
  if (o4 == 0 && on_segment(c, d, b)) return true;
  return false;
}

}  // namespace detail

/// True iff the closed polyline through the nodes has no self-intersection:
/// non-adjacent edges are disjoint and adjacent edges meet only at their
/// shared node. Edges are swept in order of their left end.
inline bool is_embedded(const ClosedCurve& curve) {
  const auto& p = curve.points();
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2 e0 = p[(i + 1) % n] - p[i];
    const Vec2 e1 = p[(i + 2) % n] - p[(i + 1) % n];
    if (cross(e0, e1) == 0.0 && dot(e0, e1) < 0.0) return false;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto xmin = [&](std::size_t i) { return std::min(p[i].x, p[(i + 1) % n].x); };
  auto xmax = [&](std::size_t i) { return std::max(p[i].x, p[(i + 1) % n].x); };
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return xmin(a) < xmin(b); });
  std::vector<std::size_t> active;
  for (std::size_t idx : order) {
    const double left = xmin(idx);
    std::erase_if(active, [&](std::size_t e) { return xmax(e) < left; });
    const double ylo = std::min(p[idx].y, p[(idx + 1) % n].y);
    const double yhi = std::max(p[idx].y, p[(idx + 1) % n].y);
    for (std::size_t e : active) {
      if ((e + 1) % n == idx || (idx + 1) % n == e) continue;
      if (std::max(p[e].y, p[(e + 1) % n].y) < ylo || std::min(p[e].y, p[(e + 1) % n].y) > yhi) continue;
      if (detail::segments_intersect(p[e], p[(e + 1) % n], p[idx], p[(idx + 1) % n])) return false;
    }
    active.push_back(idx);
  }
  return true;
}

// ---------------------------------------------------------------------------
// CSV

/// Reads `x,y` rows; closure is implicit, so the last row must differ from
/// the first. Requires at least 4 finite nodes.
inline std::vector<Vec2> parse_curve_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("curve csv: empty input");
  auto trim = [](std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
  };
  if (trim(line) != "x,y") throw std::invalid_argument("curve csv: header must be 'x,y'");
  std::vector<Vec2> pts;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    line = trim(line);
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos)
      throw std::invalid_argument("curve csv: row " + std::to_string(row) + " needs two columns");
    Vec2 p;
    try {
      std::size_t used = 0;
      const std::string xs = trim(line.substr(0, comma));
      const std::string ys = trim(line.substr(comma + 1));
      p.x = std::stod(xs, &used);
      if (used != xs.size()) throw std::invalid_argument("x");
      p.y = std::stod(ys, &used);
      if (used != ys.size()) throw std::invalid_argument("y");
    } catch (const std::exception&) {
      throw std::invalid_argument("curve csv: row " + std::to_string(row) + " is not numeric");
    }
    if (!std::isfinite(p.x) || !std::isfinite(p.y))
      throw std::invalid_argument("curve csv: row " + std::to_string(row) + " is not finite");
    pts.push_back(p);
  }
  if (pts.size() < 4) throw std::invalid_argument("curve csv: at least 4 nodes required");
  if (pts.front() == pts.back())
    throw std::invalid_argument("curve csv: last row repeats the first; closure is implicit");
  return pts;
}

inline std::vector<Vec2> read_curve_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("curve csv: cannot open " + path);
  return parse_curve_csv(in);
}

inline void write_curve_csv(std::ostream& out, std::span<const Vec2> pts) {
  std::ostringstream buf;
  buf.precision(17);
  buf << "x,y\n";
  for (auto p : pts) buf << p.x << ',' << p.y << '\n';
  out << buf.str();
}

inline void write_curve_csv(const std::string& path, const ClosedCurve& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  write_curve_csv(out, curve.points());
}

}  // namespace lcflow
