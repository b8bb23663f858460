#ifndef AQBX_GEOMETRY_HPP
#define AQBX_GEOMETRY_HPP

// Closed parametrized curves, equal-arc-length Gauss-Legendre panels, the
// Legendre interpolant of each panel map and its analytic continuation.

#include <aqbx/special.hpp>

#include <algorithm>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace aqbx {

inline constexpr int panel_order = 16;

/// A curve t in [0,1] -> complex plane. `analytic`, when present, is the
/// continuation of `position` to complex parameters.
struct ParametrizedCurve {
  std::function<cplx(double)> position;
  std::function<cplx(double)> derivative;
  std::function<cplx(cplx)> analytic;
  bool closed = true;
  std::string name;
};

/// gamma(t) = (1 + amplitude cos(2 arms pi t)) exp(-+ 2 pi i t). The
/// clockwise variant has its normal i gamma'/|gamma'| pointing outward.
inline ParametrizedCurve starfish(double amplitude = 0.3, int arms = 5, bool clockwise = true) {
  const double dir = clockwise ? -1.0 : 1.0;
  const double freq = 2.0 * pi * arms;
  ParametrizedCurve c;
  c.name = "starfish";
  c.analytic = [=](cplx t) {
    return (1.0 + amplitude * std::cos(freq * t)) * std::exp(cplx(0.0, dir * 2.0 * pi) * t);
  };
  c.position = [=](double t) {
    return (1.0 + amplitude * std::cos(freq * t)) * std::exp(cplx(0.0, dir * 2.0 * pi * t));
  };
  c.derivative = [=](double t) {
    const cplx e = std::exp(cplx(0.0, dir * 2.0 * pi * t));
    return -amplitude * freq * std::sin(freq * t) * e +
           (1.0 + amplitude * std::cos(freq * t)) * cplx(0.0, dir * 2.0 * pi) * e;
  };
  return c;
}

/// Circle of given radius; counter-clockwise by default, so the normal
/// points into the disc.
inline ParametrizedCurve circle(double radius = 1.0, cplx center = 0.0, bool clockwise = false) {
  const double dir = clockwise ? -1.0 : 1.0;
  ParametrizedCurve c;
  c.name = "circle";
  c.analytic = [=](cplx t) { return center + radius * std::exp(cplx(0.0, dir * 2.0 * pi) * t); };
  c.position = [=](double t) { return center + radius * std::exp(cplx(0.0, dir * 2.0 * pi * t)); };
  c.derivative = [=](double t) {
    return radius * cplx(0.0, dir * 2.0 * pi) * std::exp(cplx(0.0, dir * 2.0 * pi * t));
  };
  return c;
}

/// Built-in curves by name. Recognized parameters: radius, amplitude, arms,
/// and orientation ("cw" or "ccw").
inline ParametrizedCurve make_curve(const std::string& name, const std::map<std::string, std::string>& params = {}) {
  auto get = [&](const std::string& key, const std::string& fallback) {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
  };
  const std::string orient = get("orientation", name == "circle" ? "ccw" : "cw");
  if (orient != "cw" && orient != "ccw") fail(ErrorKind::Config, "curve orientation must be cw or ccw");
  const bool cw = orient == "cw";
  try {
    if (name == "starfish") return starfish(std::stod(get("amplitude", "0.3")), std::stoi(get("arms", "5")), cw);
    if (name == "circle") return circle(std::stod(get("radius", "1")), 0.0, cw);
  } catch (const std::logic_error&) {
    fail(ErrorKind::Config, "invalid curve parameter for " + name);
  }
  fail(ErrorKind::Config, "unknown curve: " + name);
}

struct Panel {
  double ta = 0.0, tb = 0.0;
  std::vector<double> nodes_t;      // global curve parameters
  std::vector<cplx> nodes_z;        // positions
  std::vector<cplx> nodes_dz;       // d gamma / ds, s in [-1, 1]
  std::vector<cplx> normals;        // i gamma' / |gamma'|
  std::vector<double> quad_weights; // Gauss-Legendre weights on [-1, 1]
  double arclen = 0.0;
  std::vector<cplx> geom_coeffs;    // Legendre coefficients of the standardized map
  std::vector<cplx> geom_dcoeffs;   // ... of its derivative
  cplx za, zb;                      // endpoints

  int order() const { return static_cast<int>(nodes_z.size()); }

  /// Bounding circle of the nodes, for proximity pruning.
  cplx bound_center;
  double bound_radius = 0.0;
};

struct Boundary {
  ParametrizedCurve curve;
  std::vector<Panel> panels;

  int num_panels() const { return static_cast<int>(panels.size()); }
  int num_nodes() const { return num_panels() * panel_order; }
  double total_length() const {
    double s = 0.0;
    for (const auto& p : panels) s += p.arclen;
    return s;
  }
  /// Mean panel arc length h.
  double h() const { return total_length() / num_panels(); }
  const Panel& panel(int i) const { return panels[static_cast<std::size_t>(i)]; }
  cplx node(int global) const {
    return panels[static_cast<std::size_t>(global / panel_order)].nodes_z[static_cast<std::size_t>(global % panel_order)];
  }
};

/// zeta = (2z - (za + zb)) / (zb - za): panel endpoints go to -1 and +1.
inline cplx standardize(const Panel& panel, cplx z) {
  const cplx chord = panel.zb - panel.za;
  if (chord == cplx(0.0)) fail(ErrorKind::Domain, "standardize: degenerate panel");
  return (2.0 * z - (panel.za + panel.zb)) / chord;
}

inline cplx unstandardize(const Panel& panel, cplx zeta) {
  return 0.5 * ((panel.zb - panel.za) * zeta + (panel.za + panel.zb));
}

/// Factor converting standardized lengths into physical ones.
inline double standard_scale(const Panel& panel) { return 0.5 * std::abs(panel.zb - panel.za); }

inline Panel make_panel(const ParametrizedCurve& curve, double ta, double tb, int order = panel_order) {
  const QuadratureRule& rule = gauss_legendre(order);
  Panel p;
  p.ta = ta;
  p.tb = tb;
  p.za = curve.position(ta);
  p.zb = curve.position(tb);
  const double half = 0.5 * (tb - ta);
  for (int i = 0; i < order; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    const double t = ta + half * (rule.nodes[ii] + 1.0);
    const cplx z = curve.position(t);
    const cplx dz = curve.derivative(t) * half;
    p.nodes_t.push_back(t);
    p.nodes_z.push_back(z);
    p.nodes_dz.push_back(dz);
    p.normals.push_back(cplx(0.0, 1.0) * dz / std::abs(dz));
    p.quad_weights.push_back(rule.weights[ii]);
    p.arclen += rule.weights[ii] * std::abs(dz);
  }
  std::vector<cplx> zeta(static_cast<std::size_t>(order));
  for (int i = 0; i < order; ++i) zeta[static_cast<std::size_t>(i)] = standardize(p, p.nodes_z[static_cast<std::size_t>(i)]);
  p.geom_coeffs = legendre_transform<cplx>(zeta, rule);
  p.geom_dcoeffs = legendre_derivative_coeffs<cplx>(p.geom_coeffs);
  cplx c = 0.0;
  for (const cplx& z : p.nodes_z) c += z;
  p.bound_center = c / double(order);
  for (const cplx& z : p.nodes_z) p.bound_radius = std::max(p.bound_radius, std::abs(z - p.bound_center));
  return p;
}

namespace detail {

inline double arclength_between(const ParametrizedCurve& curve, double a, double b) {
  const QuadratureRule& rule = gauss_legendre(16);
  const double half = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < rule.order; ++i) {
    const auto ii = static_cast<std::size_t>(i);
    s += rule.weights[ii] * std::abs(curve.derivative(a + half * (rule.nodes[ii] + 1.0)));
  }
  return s * half;
}

}  // namespace detail

/// Split a closed curve into n_panels panels of equal arc length; breakpoints
/// are found by bisection against a 1024-interval composite arc-length table.
inline Boundary build_boundary(const ParametrizedCurve& curve, int n_panels) {
  if (!curve.closed) fail(ErrorKind::Unsupported, "build_boundary: only closed curves are supported");
  if (n_panels < 4) fail(ErrorKind::Domain, "build_boundary: need at least 4 panels");
  constexpr int table_size = 1024;
  std::vector<double> cum(table_size + 1, 0.0);
  for (int j = 0; j < table_size; ++j)
    cum[static_cast<std::size_t>(j) + 1] =
        cum[static_cast<std::size_t>(j)] + detail::arclength_between(curve, double(j) / table_size, double(j + 1) / table_size);
  const double total = cum.back();

  std::vector<double> breaks(static_cast<std::size_t>(n_panels) + 1);
  breaks.front() = 0.0;
  breaks.back() = 1.0;
  for (int j = 1; j < n_panels; ++j) {
    const double target = total * j / n_panels;
    const auto it = std::upper_bound(cum.begin(), cum.end(), target);
    const auto cell = static_cast<int>(std::distance(cum.begin(), it)) - 1;
    const double t0 = double(cell) / table_size;
    double lo = t0, hi = double(cell + 1) / table_size;
    const double base = cum[static_cast<std::size_t>(cell)];
    for (int it2 = 0; it2 < 100 && hi - lo > 1e-16; ++it2) {
      const double mid = 0.5 * (lo + hi);
      if (base + detail::arclength_between(curve, t0, mid) < target)
        lo = mid;
      else
        hi = mid;
    }
    breaks[static_cast<std::size_t>(j)] = 0.5 * (lo + hi);
  }

  Boundary b;
  b.curve = curve;
  b.panels.reserve(static_cast<std::size_t>(n_panels));
  for (int j = 0; j < n_panels; ++j)
    b.panels.push_back(make_panel(curve, breaks[static_cast<std::size_t>(j)], breaks[static_cast<std::size_t>(j) + 1]));
  return b;
}

inline constexpr double continuation_trust_radius = 3.0;

/// Standardized-frame interpolant P_n[gamma](t) and its derivative at complex t.
inline std::pair<cplx, cplx> eval_geometry_interpolant(const Panel& panel, cplx t) {
  if (std::abs(t) > continuation_trust_radius)
    fail(ErrorKind::TrustRegion, "eval_geometry_interpolant: |t| exceeds the continuation trust region");
  return legendre_series_with_derivative<cplx, cplx>(panel.geom_coeffs, t);
}

/// Newton iteration for P_n[gamma](t0) = standardize(z0) from a given start.
inline std::optional<cplx> try_find_preimage(const Panel& panel, cplx z0, cplx start) {
  const cplx target = standardize(panel, z0);
  const double tol = 1e-13 * panel.arclen / standard_scale(panel);
  cplx t = start;
  for (int it = 0; it < 30; ++it) {
    if (std::abs(t) > continuation_trust_radius) return std::nullopt;
    const auto [g, dg] = legendre_series_with_derivative<cplx, cplx>(panel.geom_coeffs, t);
    const cplx residual = g - target;
    if (std::abs(residual) < tol) return t;
    if (dg == cplx(0.0)) return std::nullopt;
    t -= residual / dg;
  }
  const cplx g = legendre_series<cplx, cplx>(panel.geom_coeffs, t);
  if (std::abs(t) <= continuation_trust_radius && std::abs(g - target) < tol) return t;
  return std::nullopt;
}

/// Preimage t0 with the standardized target as the starting guess.
inline std::optional<cplx> try_find_preimage(const Panel& panel, cplx z0) {
  return try_find_preimage(panel, z0, standardize(panel, z0));
}

inline cplx find_preimage(const Panel& panel, cplx z0) {
  auto t0 = try_find_preimage(panel, z0);
  if (!t0) fail(ErrorKind::PreimageNotFound, "find_preimage: Newton iteration did not converge");
  return *t0;
}

/// Roots reached from the starting guesses -1 and +1 (duplicates removed).
/// Near concave parts the inverse map is multivalued; callers pick the root
/// predicting the largest error.
inline std::vector<cplx> find_preimage_candidates(const Panel& panel, cplx z0) {
  std::vector<cplx> roots;
  for (double s : {-1.0, 1.0}) {
    auto t = try_find_preimage(panel, z0, cplx(s, 0.0));
    if (!t) continue;
    const bool dup = std::any_of(roots.begin(), roots.end(), [&](cplx r) { return std::abs(r - *t) < 1e-10; });
    if (!dup) roots.push_back(*t);
  }
  return roots;
}

inline double distance_to_panel_nodes(const Panel& panel, cplx z) {
  double d = std::numeric_limits<double>::infinity();
  for (const cplx& w : panel.nodes_z) d = std::min(d, std::abs(w - z));
  return d;
}

/// Indices of the `count` panels with smallest node distance to z, ordered
/// by distance, ties to the lower index.
inline std::vector<int> nearest_panels(const Boundary& boundary, cplx z, int count) {
  const int np = boundary.num_panels();
  if (count > np || count < 0) fail(ErrorKind::Domain, "nearest_panels: count exceeds number of panels");
  std::vector<std::pair<double, int>> lower(static_cast<std::size_t>(np));
  for (int i = 0; i < np; ++i) {
    const Panel& p = boundary.panel(i);
    lower[static_cast<std::size_t>(i)] = {std::max(0.0, std::abs(z - p.bound_center) - p.bound_radius), i};
  }
  std::sort(lower.begin(), lower.end());
  std::vector<std::pair<double, int>> best;
  for (const auto& [lb, i] : lower) {
    if (static_cast<int>(best.size()) >= count && lb > best.back().first) break;
    best.emplace_back(distance_to_panel_nodes(boundary.panel(i), z), i);
    std::sort(best.begin(), best.end());
    if (static_cast<int>(best.size()) > count) best.pop_back();
  }
  std::vector<int> out;
  for (const auto& [d, i] : best) out.push_back(i);
  return out;
}

/// Closest node over the whole boundary: (global node index, distance).
inline std::pair<int, double> nearest_node(const Boundary& boundary, cplx z) {
  const int p = nearest_panels(boundary, z, 1).front();
  const Panel& panel = boundary.panel(p);
  int best = 0;
  double dist = std::numeric_limits<double>::infinity();
  for (int i = 0; i < panel.order(); ++i) {
    const double d = std::abs(panel.nodes_z[static_cast<std::size_t>(i)] - z);
    if (d < dist) dist = d, best = i;
  }
  return {p * panel_order + best, dist};
}

struct ClosestPoint {
  int panel = 0;
  double s = 0.0;  // standardized parameter in [-1, 1]
  cplx point;
  cplx normal;
  double distance = 0.0;
};

/// Foot of the perpendicular from z onto the panel interpolant, by Newton on
/// Re[conj(gamma')(gamma - z)] = 0, clamped to the panel.
inline ClosestPoint closest_point_on_panel(const Panel& panel, int index, cplx z) {
  const cplx zeta = standardize(panel, z);
  double s = std::clamp(zeta.real(), -1.0, 1.0);
  const std::vector<cplx> d2 = legendre_derivative_coeffs<cplx>(panel.geom_dcoeffs);
  for (int it = 0; it < 30; ++it) {
    const auto [g, dg] = legendre_series_with_derivative<cplx, double>(panel.geom_coeffs, s);
    const cplx ddg = legendre_series<cplx, double>(d2, s);
    const double f = std::real(std::conj(dg) * (g - zeta));
    const double df = std::norm(dg) + std::real(std::conj(ddg) * (g - zeta));
    if (df <= 0.0) break;
    const double step = f / df;
    s = std::clamp(s - step, -1.0, 1.0);
    if (std::abs(step) < 1e-15) break;
  }
  const auto [g, dg] = legendre_series_with_derivative<cplx, double>(panel.geom_coeffs, s);
  ClosestPoint cp;
  cp.panel = index;
  cp.s = s;
  cp.point = unstandardize(panel, g);
  const cplx dphys = dg * (panel.zb - panel.za);
  cp.normal = cplx(0.0, 1.0) * dphys / std::abs(dphys);
  cp.distance = std::abs(z - cp.point);
  return cp;
}

/// Closest boundary point to z, searching the few nearest panels.
inline ClosestPoint closest_boundary_point(const Boundary& boundary, cplx z) {
  ClosestPoint best;
  best.distance = std::numeric_limits<double>::infinity();
  for (int p : nearest_panels(boundary, z, std::min(3, boundary.num_panels()))) {
    ClosestPoint cp = closest_point_on_panel(boundary.panel(p), p, z);
    if (cp.distance < best.distance) best = cp;
  }
  return best;
}

/// Write "panel,t,x,y,nx,ny,weight" rows; weight is the arc-length weight.
inline void write_boundary_csv(std::ostream& os, const Boundary& boundary) {
  os << "panel,t,x,y,nx,ny,weight\n";
  os.precision(17);
  for (int p = 0; p < boundary.num_panels(); ++p) {
    const Panel& pan = boundary.panel(p);
    for (int i = 0; i < pan.order(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      os << p << ',' << pan.nodes_t[ii] << ',' << pan.nodes_z[ii].real() << ',' << pan.nodes_z[ii].imag() << ','
         << pan.normals[ii].real() << ',' << pan.normals[ii].imag() << ','
         << pan.quad_weights[ii] * std::abs(pan.nodes_dz[ii]) << '\n';
    }
  }
}

}  // namespace aqbx

#endif
