#ifndef AQBX_EXPERIMENTS_HPP
#define AQBX_EXPERIMENTS_HPP

// Experiment configuration and the drivers behind the command-line tool.

#include <aqbx/solver.hpp>

#include <cmath>
#include <iomanip>
#include <optional>

namespace aqbx {

struct GridSpec {
  double xmin = -1.5, xmax = 1.5, ymin = -1.5, ymax = 1.5;
  int nx = 100, ny = 100;

  bool operator==(const GridSpec&) const = default;
  std::vector<cplx> points() const {
    std::vector<cplx> z;
    z.reserve(static_cast<std::size_t>(std::max(nx, 0)) * static_cast<std::size_t>(std::max(ny, 0)));
    auto at = [](double a, double b, int n, int i) { return n == 1 ? 0.5 * (a + b) : a + (b - a) * i / (n - 1); };
    for (int j = 0; j < ny; ++j)
      for (int i = 0; i < nx; ++i) z.emplace_back(at(xmin, xmax, nx, i), at(ymin, ymax, ny, j));
    return z;
  }
};

struct ExperimentConfig {
  std::string kernel = "helmholtz";
  std::string curve = "starfish";
  double amplitude = 0.3;
  int arms = 5;
  double radius = 1.0;  // circle only
  int n_panels = 100;
  std::optional<double> k;
  std::optional<double> c = 2.0;  // k = c/h
  std::vector<double> tolerances{1e-4, 1e-6, 1e-8, 1e-10, 1e-12, 1e-13};
  double r_over_h = 0.25;
  std::vector<double> r_over_h_list{0.10, 0.25, 0.50, 0.75, 1.00};
  int near_count = default_near_count;
  int source_count = 5;
  double source_radius = 0.2;
  std::uint64_t seed = 1;
  std::vector<double> distances;  // close-source study, in units of h
  GridSpec grid;
  std::vector<double> gmres_tolerances{1e-2, 1e-4, 1e-6, 1e-8, 1e-10, 1e-12};
  double aqbx_ratio = 1e-2;
  std::string surrogate = "max-norm";
  int sweep_p_max = 40;
  int sweep_kappa_max = 8;

  bool operator==(const ExperimentConfig&) const = default;
};

namespace detail {

inline std::string format_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

inline std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return {};
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

inline double parse_double(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &used);
  } catch (const std::logic_error&) {
    fail(ErrorKind::Config, key + ": not a number: " + v);
  }
  if (used != v.size()) fail(ErrorKind::Config, key + ": not a number: " + v);
  return x;
}

inline long long parse_int(const std::string& key, const std::string& v) {
  std::size_t used = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &used);
  } catch (const std::logic_error&) {
    fail(ErrorKind::Config, key + ": not an integer: " + v);
  }
  if (used != v.size()) fail(ErrorKind::Config, key + ": not an integer: " + v);
  return x;
}

inline std::vector<double> parse_list(const std::string& key, const std::string& v) {
  std::vector<double> out;
  if (trim(v).empty()) return out;
  std::istringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_double(key, trim(item)));
  return out;
}

inline std::string format_list(const std::vector<double>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
  return s;
}

}  // namespace detail

/// Applies one key=value assignment.
inline void set_config_value(ExperimentConfig& c, const std::string& key, const std::string& value) {
  using namespace detail;
  const std::string v = trim(value);
  if (key == "kernel") c.kernel = v;
  else if (key == "curve") c.curve = v;
  else if (key == "amplitude") c.amplitude = parse_double(key, v);
  else if (key == "arms") c.arms = static_cast<int>(parse_int(key, v));
  else if (key == "radius") c.radius = parse_double(key, v);
  else if (key == "n_panels") c.n_panels = static_cast<int>(parse_int(key, v));
  else if (key == "k") c.k = v.empty() ? std::nullopt : std::optional<double>(parse_double(key, v));
  else if (key == "c") c.c = v.empty() ? std::nullopt : std::optional<double>(parse_double(key, v));
  else if (key == "tolerances") c.tolerances = parse_list(key, v);
  else if (key == "r_over_h") c.r_over_h = parse_double(key, v);
  else if (key == "r_over_h_list") c.r_over_h_list = parse_list(key, v);
  else if (key == "near_count") c.near_count = static_cast<int>(parse_int(key, v));
  else if (key == "source_count") c.source_count = static_cast<int>(parse_int(key, v));
  else if (key == "source_radius") c.source_radius = parse_double(key, v);
  else if (key == "seed") {
    const long long s = parse_int(key, v);
    if (s < 0) fail(ErrorKind::Config, "seed must be nonnegative");
    c.seed = static_cast<std::uint64_t>(s);
  } else if (key == "distances") c.distances = parse_list(key, v);
  else if (key == "grid_xmin") c.grid.xmin = parse_double(key, v);
  else if (key == "grid_xmax") c.grid.xmax = parse_double(key, v);
  else if (key == "grid_ymin") c.grid.ymin = parse_double(key, v);
  else if (key == "grid_ymax") c.grid.ymax = parse_double(key, v);
  else if (key == "grid_nx") c.grid.nx = static_cast<int>(parse_int(key, v));
  else if (key == "grid_ny") c.grid.ny = static_cast<int>(parse_int(key, v));
  else if (key == "gmres_tolerances") c.gmres_tolerances = parse_list(key, v);
  else if (key == "aqbx_ratio") c.aqbx_ratio = parse_double(key, v);
  else if (key == "surrogate") c.surrogate = v;
  else if (key == "sweep_p_max") c.sweep_p_max = static_cast<int>(parse_int(key, v));
  else if (key == "sweep_kappa_max") c.sweep_kappa_max = static_cast<int>(parse_int(key, v));
  else fail(ErrorKind::Config, "unknown config key: " + key);
}

/// Reads key=value lines on top of `base`. Blank lines and lines starting
/// with '#' are skipped.
inline ExperimentConfig parse_config(std::istream& is, ExperimentConfig base = {}) {
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const std::string t = detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) fail(ErrorKind::Config, "line " + std::to_string(lineno) + ": expected key=value");
    set_config_value(base, detail::trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return base;
}

inline ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {}) {
  std::istringstream is(text);
  return parse_config(is, std::move(base));
}

inline std::string serialize_config(const ExperimentConfig& c) {
  using detail::format_double;
  using detail::format_list;
  std::ostringstream os;
  os << "kernel=" << c.kernel << '\n'
     << "curve=" << c.curve << '\n'
     << "amplitude=" << format_double(c.amplitude) << '\n'
     << "arms=" << c.arms << '\n'
     << "radius=" << format_double(c.radius) << '\n'
     << "n_panels=" << c.n_panels << '\n'
     << "k=" << (c.k ? format_double(*c.k) : "") << '\n'
     << "c=" << (c.c ? format_double(*c.c) : "") << '\n'
     << "tolerances=" << format_list(c.tolerances) << '\n'
     << "r_over_h=" << format_double(c.r_over_h) << '\n'
     << "r_over_h_list=" << format_list(c.r_over_h_list) << '\n'
     << "near_count=" << c.near_count << '\n'
     << "source_count=" << c.source_count << '\n'
     << "source_radius=" << format_double(c.source_radius) << '\n'
     << "seed=" << c.seed << '\n'
     << "distances=" << format_list(c.distances) << '\n'
     << "grid_xmin=" << format_double(c.grid.xmin) << '\n'
     << "grid_xmax=" << format_double(c.grid.xmax) << '\n'
     << "grid_ymin=" << format_double(c.grid.ymin) << '\n'
     << "grid_ymax=" << format_double(c.grid.ymax) << '\n'
     << "grid_nx=" << c.grid.nx << '\n'
     << "grid_ny=" << c.grid.ny << '\n'
     << "gmres_tolerances=" << format_list(c.gmres_tolerances) << '\n'
     << "aqbx_ratio=" << format_double(c.aqbx_ratio) << '\n'
     << "surrogate=" << c.surrogate << '\n'
     << "sweep_p_max=" << c.sweep_p_max << '\n'
     << "sweep_kappa_max=" << c.sweep_kappa_max << '\n';
  return os.str();
}

inline void validate_config(const ExperimentConfig& c) {
  auto bad = [](const std::string& m) { fail(ErrorKind::Config, m); };
  if (c.kernel != "laplace" && c.kernel != "helmholtz") bad("kernel must be laplace or helmholtz");
  if (c.curve != "starfish" && c.curve != "circle") bad("curve must be starfish or circle");
  if (c.n_panels < 4) bad("n_panels must be at least 4");
  if (c.kernel == "helmholtz") {
    if (c.k.has_value() == c.c.has_value()) bad("give exactly one of k and c for helmholtz");
    const double v = c.k ? *c.k : *c.c;
    if (!(v > 0.0) || !std::isfinite(v)) bad("wavenumber must be positive and finite");
  }
  auto check_tols = [&](const std::vector<double>& t, const std::string& name) {
    for (double e : t)
      if (!(e > 1e-15 && e < 1.0)) bad(name + " must lie in (1e-15, 1)");
  };
  check_tols(c.tolerances, "tolerances");
  check_tols(c.gmres_tolerances, "gmres_tolerances");
  if (!(c.aqbx_ratio > 0.0 && c.aqbx_ratio <= 1.0)) bad("aqbx_ratio must lie in (0, 1]");
  auto check_rh = [&](double r) {
    if (!(r > 0.0 && r <= 1.0)) bad("r_over_h must lie in (0, 1]");
  };
  check_rh(c.r_over_h);
  for (double r : c.r_over_h_list) check_rh(r);
  if (c.near_count < 1 || c.near_count > c.n_panels) bad("near_count must lie in [1, n_panels]");
  if (c.source_count < 1) bad("source_count must be positive");
  if (!(c.source_radius >= 0.0)) bad("source_radius must be nonnegative");
  for (double d : c.distances)
    if (!(d > 0.0) || !std::isfinite(d)) bad("distances must be positive");
  const GridSpec& g = c.grid;
  for (double v : {g.xmin, g.xmax, g.ymin, g.ymax})
    if (!std::isfinite(v)) bad("grid bounds must be finite");
  if (g.xmin > g.xmax || g.ymin > g.ymax) bad("grid bounds are inverted");
  if (g.nx < 0 || g.ny < 0) bad("grid sizes must be nonnegative");
  if (c.surrogate != "max-norm" && c.surrogate != "extrapolate") bad("surrogate must be max-norm or extrapolate");
  if (c.sweep_p_max < 1 || c.sweep_p_max > max_expansion_order) bad("sweep_p_max must lie in [1, 60]");
  if (c.sweep_kappa_max < 1 || c.sweep_kappa_max * panel_order > max_upsampled_nodes)
    bad("sweep_kappa_max must lie in [1, 8]");
}

/// Defaults of each command: 100 panels, or 200 with `paper`.
inline ExperimentConfig default_config(const std::string& command, bool paper = false) {
  ExperimentConfig c;
  c.n_panels = paper ? 200 : 100;
  if (command == "estimate-map") {
    c.kernel = "laplace";
    c.c.reset();
    c.n_panels = 27;
    c.grid = {-1.4, 1.4, -1.4, 1.4, 200, 200};
  } else if (command == "field") {
    c.tolerances = {1e-4, 1e-8, 1e-12};
    if (paper) c.grid.nx = c.grid.ny = 500;
  } else if (command == "table-rh") {
    c.tolerances = {1e-10};
  } else if (command == "close-source") {
    c.tolerances = {1e-12};
    for (int i = 0; i < 20; ++i) c.distances.push_back(std::exp2(-3.0 + 6.0 * i / 19.0));
  } else if (command != "table-tol" && command != "solve") {
    fail(ErrorKind::Config, "unknown command: " + command);
  }
  return c;
}

/// CSV table with a header row; numbers are written with 17 significant digits.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  static std::string cell(double v) { return detail::format_double(v); }
  static std::string cell(int v) { return std::to_string(v); }
  static std::string cell(const std::string& v) { return v; }
  template <class... T>
  void add(const T&... v) {
    rows.push_back({cell(v)...});
  }
  void write(std::ostream& os) const {
    for (std::size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < r.size(); ++i) os << (i ? "," : "") << r[i];
      os << '\n';
    }
  }
  std::size_t column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) fail(ErrorKind::Domain, "no such column: " + name);
    return static_cast<std::size_t>(it - header.begin());
  }
  double value(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }
};

inline Boundary boundary_from_config(const ExperimentConfig& c) {
  std::map<std::string, std::string> params{{"orientation", c.kernel == "helmholtz" ? "cw" : "ccw"},
                                            {"amplitude", detail::format_double(c.amplitude)},
                                            {"arms", std::to_string(c.arms)},
                                            {"radius", detail::format_double(c.radius)}};
  return build_boundary(make_curve(c.curve, params), c.n_panels);
}

inline double wavenumber(const ExperimentConfig& c, double h) { return c.k ? *c.k : *c.c / h; }

inline BoundaryValueProblem problem_from_config(const ExperimentConfig& c) {
  validate_config(c);
  Boundary b = boundary_from_config(c);
  if (c.kernel == "laplace") return laplace_problem(std::move(b), c.seed, c.source_count);
  const double k = wavenumber(c, b.h());
  return helmholtz_problem(std::move(b), k, c.seed, c.source_count, c.source_radius);
}

inline AqbxOptions aqbx_options(const ExperimentConfig& c) {
  AqbxOptions o;
  o.surrogate = c.surrogate == "extrapolate" ? SigmaSurrogate::Extrapolate : SigmaSurrogate::PanelMaxNorm;
  o.flag_caps = true;
  return o;
}

/// Layer potential at z with the density interpolant integrated over the
/// exact curve, adaptively on panels within two panel lengths of z.
inline cplx adaptive_layer_potential(const Boundary& boundary, const Density& density, const KernelSpec& kernel, cplx z,
                                     double tol = 1e-15) {
  const QuadratureRule& rule = gauss_legendre(panel_order);
  const ParametrizedCurve& cv = boundary.curve;
  cplx total = 0.0;
  for (int p = 0; p < boundary.num_panels(); ++p) {
    const Panel& pan = boundary.panel(p);
    if (distance_to_panel_nodes(pan, z) > 2.0 * pan.arclen) {
      const std::array<int, 1> one{p};
      total += direct_eval_at(boundary, density, kernel, z, one);
      continue;
    }
    const auto coeffs = density.panel_coeffs(p);
    const double half = 0.5 * (pan.tb - pan.ta);
    auto f = [&](double s) {
      const double t = pan.ta + (s + 1.0) * half;
      const cplx dw = cv.derivative(t) * half;
      const cplx n = cplx(0.0, 1.0) * dw / std::abs(dw);
      return kernel_value(kernel, z, cv.position(t), n) * legendre_series<cplx, double>(coeffs, s) * std::abs(dw);
    };
    auto integrate = [&](double a, double b) {
      cplx s = 0.0;
      for (int i = 0; i < panel_order; ++i) {
        const auto ii = static_cast<std::size_t>(i);
        s += rule.weights[ii] * f(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[ii]);
      }
      return 0.5 * (b - a) * s;
    };
    const double atol = tol * std::max(panel_max_norm(density, p), 1e-300);
    auto recurse = [&](auto&& self, double a, double b, cplx whole, int depth) -> cplx {
      const double m = 0.5 * (a + b);
      const cplx l = integrate(a, m), r = integrate(m, b);
      if (std::abs(l + r - whole) <= atol || depth >= 50) return l + r;
      return self(self, a, m, l, depth + 1) + self(self, m, b, r, depth + 1);
    };
    total += recurse(recurse, -1.0, 1.0, integrate(-1.0, 1.0), 0);
  }
  return total;
}

/// The side of the boundary z lies on, from its closest boundary point.
inline Side side_of(const Boundary& boundary, cplx z) {
  const ClosestPoint cp = closest_boundary_point(boundary, z);
  const double along = std::real((z - cp.point) * std::conj(cp.normal));
  return along * inward_normal_sign(boundary) >= 0.0 ? Side::Interior : Side::Exterior;
}

inline cplx potential_value(const KernelSpec& kernel, cplx v) { return kernel.is_helmholtz() ? v : cplx(v.real()); }

/// Measured direct-quadrature error against the adaptive reference, and the
/// summed potential error estimate, at grid points on the solution side.
inline Table run_estimate_map(const ExperimentConfig& c) {
  const BoundaryValueProblem bvp = problem_from_config(c);
  const Density sigma = reference_density(bvp);
  const AqbxOptions opt = aqbx_options(c);
  Table t;
  t.header = {"x", "y", "measured", "estimated"};
  for (const cplx& z : c.grid.points()) {
    if (side_of(bvp.boundary, z) != bvp.side) continue;
    if (nearest_node(bvp.boundary, z).second < 1e-10) continue;
    const cplx d = potential_value(bvp.kernel, direct_eval_at(bvp.boundary, sigma, bvp.kernel, z));
    const cplx r = potential_value(bvp.kernel, adaptive_layer_potential(bvp.boundary, sigma, bvp.kernel, z));
    const double est = direct_error_estimate(bvp.boundary, sigma, bvp.kernel, z, c.near_count, opt.surrogate);
    t.add(z.real(), z.imag(), std::abs(d - r), est);
  }
  return t;
}

/// AQBX-corrected field on the grid for every configured tolerance.
inline Table run_field(const ExperimentConfig& c) {
  const BoundaryValueProblem bvp = problem_from_config(c);
  const Density sigma = reference_density(bvp);
  std::vector<cplx> targets;
  for (const cplx& z : c.grid.points())
    if (side_of(bvp.boundary, z) == bvp.side && nearest_node(bvp.boundary, z).second > 1e-10) targets.push_back(z);
  FieldOptions fo;
  fo.r_over_h = c.r_over_h;
  fo.near_count = c.near_count;
  fo.aqbx = aqbx_options(c);
  Table t;
  t.header = {"tolerance", "x", "y", "re", "im", "error", "activated"};
  for (double eps : c.tolerances) {
    const auto pts = evaluate_field(bvp.boundary, sigma, bvp.kernel, targets, eps, fo);
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const cplx u = potential_value(bvp.kernel, pts[i].value);
      t.add(eps, targets[i].real(), targets[i].imag(), u.real(), u.imag(), std::abs(u - bvp.exact(targets[i])),
            pts[i].activated ? 1 : 0);
    }
  }
  return t;
}

/// On-surface errors of fixed-order QBX over all centers, err[kappa-1][p].
struct FixedSweep {
  std::vector<std::vector<double>> err;

  /// Cheapest (p, kappa) by p*kappa reaching `target`, if any.
  std::optional<std::pair<int, int>> optimal(double target) const {
    std::optional<std::pair<int, int>> best;
    for (std::size_t kk = 0; kk < err.size(); ++kk)
      for (std::size_t p = 1; p < err[kk].size(); ++p)
        if (err[kk][p] <= target) {
          const int kappa = static_cast<int>(kk) + 1;
          const int pp = static_cast<int>(p);
          if (!best || pp * kappa < best->first * best->second) best = {pp, kappa};
          break;
        }
    return best;
  }
};

/// Shared state of the on-surface studies: the limit from one side at every
/// base node, with the far part precomputed.
struct SurfaceStudy {
  const BoundaryValueProblem& bvp;
  const Density& sigma;
  PanelCache cache;
  std::vector<ExpansionCenter> centers;
  std::vector<cplx> far;

  SurfaceStudy(const BoundaryValueProblem& problem, const Density& density, double r_over_h, int near_count)
      : bvp(problem), sigma(density), cache(problem.boundary) {
    centers = covering_base_nodes(bvp.boundary, place_centers(bvp.boundary, r_over_h, bvp.side, near_count));
    for (const ExpansionCenter& ctr : centers)
      far.push_back(direct_eval_far(bvp.boundary, sigma, bvp.kernel, bvp.boundary.node(ctr.base_global()), ctr.near));
  }

  double node_error(std::size_t i, cplx expansion_value) const {
    const int g = centers[i].base_global();
    return std::abs(potential_value(bvp.kernel, far[i] + expansion_value) - bvp.f[static_cast<std::size_t>(g)]);
  }

  struct AqbxResult {
    double error = 0.0;
    WorkCounter work;
    int capped = 0;
  };

  AqbxResult run_aqbx(double eps, const AqbxOptions& opt) const {
    AqbxResult res;
    for (std::size_t i = 0; i < centers.size(); ++i) {
      const Expansion e = compute_expansion(bvp.boundary, cache, sigma, bvp.kernel, centers[i], eps, opt);
      res.work.add(e);
      if (e.terminated_by != Termination::Tolerance) ++res.capped;
      const cplx z = bvp.boundary.node(centers[i].base_global());
      res.error = std::max(res.error, node_error(i, evaluate_expansion(e, z, eps).value));
    }
    return res;
  }

  FixedSweep run_sweep(int p_max, int kappa_max) const {
    FixedSweep s;
    s.err.assign(static_cast<std::size_t>(kappa_max), std::vector<double>(static_cast<std::size_t>(p_max) + 1, 0.0));
    for (int kappa = 1; kappa <= kappa_max; ++kappa)
      for (std::size_t i = 0; i < centers.size(); ++i) {
        const Expansion e = compute_expansion_fixed(cache, sigma, bvp.kernel, centers[i], p_max, kappa);
        const auto sums = expansion_partial_sums(e, bvp.boundary.node(centers[i].base_global()));
        auto& row = s.err[static_cast<std::size_t>(kappa - 1)];
        for (std::size_t p = 0; p < sums.size(); ++p) row[p] = std::max(row[p], node_error(i, sums[p]));
      }
    return s;
  }
};

namespace detail {

inline void add_work_row(Table& t, double lead, const SurfaceStudy::AqbxResult& a, const FixedSweep& sweep) {
  const auto opt = sweep.optimal(a.error);
  const double w = a.work.avg_w();
  if (opt)
    t.add(lead, a.error, a.work.avg_p(), a.work.avg_kappa(), w, opt->first, opt->second,
          work_qbx(opt->first, opt->second), work_qbx(opt->first, opt->second) / w, a.capped);
  else
    t.add(lead, a.error, a.work.avg_p(), a.work.avg_kappa(), w, std::string("nan"), std::string("nan"),
          std::string("nan"), std::string("nan"), a.capped);
}

inline const std::vector<std::string> work_columns = {"error",   "avg_p", "avg_kappa", "avg_W",   "opt_p",
                                                      "opt_kappa", "opt_W", "speedup",   "capped"};

}  // namespace detail

/// AQBX error and work per tolerance against the cheapest fixed QBX
/// parameters reaching the same error.
inline Table run_table_tol(const ExperimentConfig& c) {
  const BoundaryValueProblem bvp = problem_from_config(c);
  const Density sigma = reference_density(bvp);
  const SurfaceStudy study(bvp, sigma, c.r_over_h, c.near_count);
  const FixedSweep sweep = study.run_sweep(c.sweep_p_max, c.sweep_kappa_max);
  Table t;
  t.header = {"tolerance"};
  t.header.insert(t.header.end(), detail::work_columns.begin(), detail::work_columns.end());
  for (double eps : c.tolerances) detail::add_work_row(t, eps, study.run_aqbx(eps, aqbx_options(c)), sweep);
  return t;
}

/// The same comparison over expansion distances at the first tolerance.
inline Table run_table_rh(const ExperimentConfig& c) {
  if (c.tolerances.empty()) fail(ErrorKind::Config, "table-rh needs a tolerance");
  const BoundaryValueProblem bvp = problem_from_config(c);
  const Density sigma = reference_density(bvp);
  Table t;
  t.header = {"r_over_h"};
  t.header.insert(t.header.end(), detail::work_columns.begin(), detail::work_columns.end());
  for (double rh : c.r_over_h_list) {
    const SurfaceStudy study(bvp, sigma, rh, c.near_count);
    const FixedSweep sweep = study.run_sweep(c.sweep_p_max, c.sweep_kappa_max);
    detail::add_work_row(t, rh, study.run_aqbx(c.tolerances.front(), aqbx_options(c)), sweep);
  }
  return t;
}

/// One source at distance d*h inside the obstacle tip per row: on-surface
/// AQBX error, far-field direct error and the upsampling error estimate.
inline Table run_close_source(const ExperimentConfig& c) {
  validate_config(c);
  if (c.kernel != "helmholtz" || c.curve != "starfish")
    fail(ErrorKind::Config, "close-source runs the helmholtz starfish problem");
  if (c.tolerances.empty()) fail(ErrorKind::Config, "close-source needs a tolerance");
  const double h = boundary_from_config(c).h();
  const double cc = c.c ? *c.c : *c.k * h;
  Table t;
  t.header = {"d_over_h", "d", "aqbx_error", "direct_error", "resolution", "capped"};
  for (double dh : c.distances) {
    const BoundaryValueProblem bvp = helmholtz_close_source_problem(c.n_panels, cc, dh * h);
    const Density sigma = reference_density(bvp);
    const SurfaceStudy study(bvp, sigma, c.r_over_h, c.near_count);
    const auto a = study.run_aqbx(c.tolerances.front(), aqbx_options(c));
    t.add(dh, dh * h, a.error, far_field_error(bvp, sigma), resolution_estimate(sigma), a.capped);
  }
  return t;
}

/// GMRES solves with the two-sided AQBX operator, one row per tolerance.
inline Table run_solve(const ExperimentConfig& c) {
  const BoundaryValueProblem bvp = problem_from_config(c);
  Table t;
  t.header = {"gmres_tol", "aqbx_tol", "iterations", "error", "resolution"};
  for (double g : c.gmres_tolerances) {
    const auto [sigma, rep] = solve(bvp, g, g * c.aqbx_ratio, c.r_over_h);
    t.add(g, g * c.aqbx_ratio, rep.iterations, rep.eval_error, rep.resolution);
  }
  return t;
}

inline Table run_command(const std::string& command, const ExperimentConfig& c) {
  validate_config(c);
  if (command == "estimate-map") return run_estimate_map(c);
  if (command == "field") return run_field(c);
  if (command == "table-tol") return run_table_tol(c);
  if (command == "table-rh") return run_table_rh(c);
  if (command == "close-source") return run_close_source(c);
  if (command == "solve") return run_solve(c);
  fail(ErrorKind::Config, "unknown command: " + command);
}

}  // namespace aqbx

#endif
