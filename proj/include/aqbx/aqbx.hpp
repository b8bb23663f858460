#ifndef AQBX_AQBX_HPP
#define AQBX_AQBX_HPP

// Adaptive QBX: expansion centers, coefficient computation with
// tolerance-driven upsampling, tolerance-driven evaluation, and local
// near/far evaluation of layer potentials.

#include <aqbx/estimates.hpp>

#include <mutex>
#include <sstream>

namespace aqbx {

enum class Side { Interior, Exterior };

inline std::string_view to_string(Side s) { return s == Side::Interior ? "interior" : "exterior"; }

/// +1 when the boundary normal points into the bounded region (counter-
/// clockwise parametrization), -1 otherwise.
inline double inward_normal_sign(const Boundary& boundary) {
  double area = 0.0;
  for (const Panel& p : boundary.panels)
    for (int i = 0; i < p.order(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      area += p.quad_weights[ii] * std::imag(std::conj(p.nodes_z[ii]) * p.nodes_dz[ii]);
    }
  return area > 0.0 ? 1.0 : -1.0;
}

/// Unit offset direction from a boundary point towards the given side.
inline cplx side_direction(const Boundary& boundary, Side side, cplx normal) {
  const double s = inward_normal_sign(boundary);
  return (side == Side::Interior ? s : -s) * normal;
}

struct ExpansionCenter {
  cplx z0;
  double r = 0.0;
  int base_panel = 0;
  int base_node = 0;  // index within the base panel
  Side side = Side::Interior;
  std::vector<int> near;

  int base_global() const { return base_panel * panel_order + base_node; }
};

inline constexpr int default_near_count = 5;

/// One center per node at distance r_over_h*h along the normal towards `side`.
inline std::vector<ExpansionCenter> place_centers(const Boundary& boundary, double r_over_h, Side side,
                                                  int near_count = default_near_count) {
  if (!(r_over_h > 0.0 && r_over_h <= 1.0)) fail(ErrorKind::Domain, "place_centers: r/h must lie in (0, 1]");
  const double dist = r_over_h * boundary.h();
  const double sgn = inward_normal_sign(boundary) * (side == Side::Interior ? 1.0 : -1.0);
  std::vector<ExpansionCenter> centers;
  centers.reserve(static_cast<std::size_t>(boundary.num_nodes()));
  for (int p = 0; p < boundary.num_panels(); ++p) {
    const Panel& pan = boundary.panel(p);
    for (int i = 0; i < pan.order(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      ExpansionCenter c;
      c.z0 = pan.nodes_z[ii] + sgn * dist * pan.normals[ii];
      c.base_panel = p;
      c.base_node = i;
      c.side = side;
      c.r = nearest_node(boundary, c.z0).second;
      if (c.r < 0.5 * dist)
        fail(ErrorKind::GeometryTooClose, "place_centers: center " + std::to_string(p * panel_order + i) +
                                              " is closer to another part of the boundary");
      c.near = nearest_panels(boundary, c.z0, std::min(near_count, boundary.num_panels()));
      centers.push_back(std::move(c));
    }
  }
  return centers;
}

/// Widens r where the base node lies outside the disc (another node is
/// closer), so that the center can evaluate at its own node.
inline std::vector<ExpansionCenter> covering_base_nodes(const Boundary& boundary, std::vector<ExpansionCenter> centers) {
  for (ExpansionCenter& c : centers) c.r = std::max(c.r, std::abs(boundary.node(c.base_global()) - c.z0));
  return centers;
}

/// Boundary geometry on the kappa*n Gauss-Legendre nodes of one panel,
/// interpolated from its n-node Legendre representation.
struct UpsampledPanel {
  int kappa = 1;
  std::vector<cplx> z, normal;
  std::vector<double> weight;  // quadrature weight times |dz/ds|
};

class PanelCache {
 public:
  explicit PanelCache(const Boundary& boundary)
      : boundary_(&boundary), slots_(static_cast<std::size_t>(boundary.num_panels()) * max_kappa) {}

  static constexpr int max_kappa = max_upsampled_nodes / panel_order;

  const UpsampledPanel& get(int panel, int kappa) const {
    if (kappa < 1 || kappa > max_kappa) fail(ErrorKind::UpsamplingCap, "upsampling rate exceeds the node cap");
    auto& slot = slots_[static_cast<std::size_t>(panel) * max_kappa + static_cast<std::size_t>(kappa - 1)];
    std::lock_guard lock(mutex_);
    if (!slot) slot = std::make_unique<UpsampledPanel>(build(boundary_->panel(panel), kappa));
    return *slot;
  }

  static UpsampledPanel build(const Panel& pan, int kappa) {
    const int n = pan.order(), nq = kappa * n;
    UpsampledPanel u;
    u.kappa = kappa;
    const QuadratureRule& rule = gauss_legendre(nq);
    if (kappa == 1) {
      u.z = pan.nodes_z;
      u.normal = pan.normals;
      for (int q = 0; q < n; ++q)
        u.weight.push_back(pan.quad_weights[static_cast<std::size_t>(q)] * std::abs(pan.nodes_dz[static_cast<std::size_t>(q)]));
      return u;
    }
    const DenseMatrix& L = interpolation_matrix(n, nq);
    const DenseMatrix& D = interpolation_matrix(n, nq, true);
    for (int q = 0; q < nq; ++q) {
      cplx z = 0.0, dz = 0.0;
      for (int i = 0; i < n; ++i) {
        z += L(q, i) * pan.nodes_z[static_cast<std::size_t>(i)];
        dz += D(q, i) * pan.nodes_z[static_cast<std::size_t>(i)];
      }
      u.z.push_back(z);
      u.normal.push_back(cplx(0.0, 1.0) * dz / std::abs(dz));
      u.weight.push_back(rule.weights[static_cast<std::size_t>(q)] * std::abs(dz));
    }
    return u;
  }

 private:
  const Boundary* boundary_;
  mutable std::vector<std::unique_ptr<UpsampledPanel>> slots_;
  mutable std::mutex mutex_;
};

enum class Termination { Tolerance, OrderCap, UpsamplingCap, Fixed };

inline std::string_view to_string(Termination t) {
  switch (t) {
    case Termination::Tolerance: return "tolerance";
    case Termination::OrderCap: return "order-cap";
    case Termination::UpsamplingCap: return "upsampling-cap";
    case Termination::Fixed: return "fixed";
  }
  return "unknown";
}

struct AqbxOptions {
  int p_max = max_expansion_order;
  int kappa_n_max = max_upsampled_nodes;
  bool conservative = true;   // two-term termination tests
  bool reliability = true;    // upsample whenever m > kappa*n/2
  SigmaSurrogate surrogate = SigmaSurrogate::PanelMaxNorm;
  bool worst_root = false;
  bool flag_caps = false;  // stop and record the cap instead of throwing
  bool sum_estimates = false;  // sum E_C over the near panels instead of the max
};

struct Expansion {
  ExpansionCenter center;
  KernelSpec kernel;
  double tolerance = 0.0;
  std::vector<CoefficientTerm> coeffs;  // a_0 .. a_p
  std::vector<int> kappa;               // upsampling rate used for each a_m
  std::vector<double> coeff_estimate;   // E_C over the near panels at acceptance
  Termination terminated_by = Termination::Tolerance;

  int order() const { return static_cast<int>(coeffs.size()) - 1; }
  /// Source evaluations per original source point, sum_{m=1}^p kappa_m.
  double work() const {
    double w = 0.0;
    for (std::size_t m = 1; m < kappa.size(); ++m) w += kappa[m];
    return w;
  }
};

inline double work_qbx(int p, int kappa) { return double(p) * kappa; }

struct WorkCounter {
  int centers = 0;
  double sum_p = 0.0;
  double sum_w = 0.0;

  void add(const Expansion& e) {
    ++centers;
    sum_p += e.order();
    sum_w += e.work();
  }
  double avg_p() const { return centers ? sum_p / centers : 0.0; }
  double avg_w() const { return centers ? sum_w / centers : 0.0; }
  /// Average upsampling rate, W/p over all centers.
  double avg_kappa() const { return sum_p > 0.0 ? sum_w / sum_p : 0.0; }
};

namespace detail {

/// Sources of the near panels at one upsampling rate: positions, normals,
/// weighted density and, for Helmholtz, Graf terms up to `order`.
struct SourceBlock {
  int kappa = 0;
  std::vector<cplx> w, n, q;  // q = sigma * weight
  int order = -1;
  std::vector<cplx> pos, neg;  // (order+1) per source
  std::vector<cplx> ratio, power;  // Laplace: r/(w-z0) and running -n/(2pi (w-z0)) (r/(w-z0))^m
  int power_m = -1;

  std::size_t size() const { return w.size(); }
};

inline SourceBlock make_block(const PanelCache& cache, const Density& density, const ExpansionCenter& c, int kappa) {
  SourceBlock b;
  b.kappa = kappa;
  for (int p : c.near) {
    const UpsampledPanel& up = cache.get(p, kappa);
    const auto sig = upsample(density.panel_values(p), kappa);
    for (std::size_t j = 0; j < up.z.size(); ++j) {
      b.w.push_back(up.z[j]);
      b.n.push_back(up.normal[j]);
      b.q.push_back(sig[j] * up.weight[j]);
    }
  }
  return b;
}

inline void ensure_graf(SourceBlock& b, double k, cplx z0, int order) {
  if (order <= b.order) return;
  const int M = std::max(order, std::max(2 * b.order, 16));
  const auto stride = static_cast<std::size_t>(M) + 1;
  b.pos.assign(b.size() * stride, 0.0);
  b.neg.assign(b.size() * stride, 0.0);
  for (std::size_t j = 0; j < b.size(); ++j)
    graf_terms(k, b.w[j], z0, M, std::span<cplx>(b.pos).subspan(j * stride, stride),
               std::span<cplx>(b.neg).subspan(j * stride, stride));
  b.order = M;
}

/// a_m from one source block.
inline CoefficientTerm block_coefficient(SourceBlock& b, const KernelSpec& spec, const ExpansionCenter& c, int m) {
  CoefficientTerm t;
  t.m = m;
  if (!spec.is_helmholtz()) {
    if (b.power_m < 0 || b.power_m > m) {
      b.ratio.resize(b.size());
      b.power.resize(b.size());
      for (std::size_t j = 0; j < b.size(); ++j) {
        const cplx d = b.w[j] - c.z0;
        b.ratio[j] = c.r / d;
        b.power[j] = -b.n[j] / (2.0 * pi * d) * std::pow(b.ratio[j], m);
      }
      b.power_m = m;
    }
    while (b.power_m < m) {
      for (std::size_t j = 0; j < b.size(); ++j) b.power[j] *= b.ratio[j];
      ++b.power_m;
    }
    cplx s = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) s += b.power[j] * b.q[j];
    t.v[0] = s;
    return t;
  }
  ensure_graf(b, spec.k, c.z0, m + 1);
  const auto stride = static_cast<std::size_t>(b.order) + 1;
  cplx sp = 0.0, sn = 0.0;
  for (std::size_t j = 0; j < b.size(); ++j) {
    const std::span<const cplx> pos(b.pos.data() + j * stride, stride), neg(b.neg.data() + j * stride, stride);
    sp += helmholtz_c(spec.k, b.n[j], pos, neg, m) * b.q[j];
    if (m > 0) sn += helmholtz_c(spec.k, b.n[j], pos, neg, -m) * b.q[j];
  }
  if (m == 0) {
    t.v[0] = sp;
    return t;
  }
  const double scale = helmholtz_a_scale(spec.k, c.r, m);
  t.size = 2;
  t.v = {scale * sp, scale * sn};
  return t;
}

}  // namespace detail

/// Algorithm 1: coefficients a_0..a_p at one center to tolerance eps. The
/// upsampling rate never decreases with m; it is raised while the largest
/// coefficient error estimate over the near panels exceeds eps, and
/// (optionally) while m > kappa*n/2.
inline Expansion compute_expansion(const Boundary& boundary, const PanelCache& cache, const Density& density,
                                   const KernelSpec& kernel, const ExpansionCenter& center, double eps,
                                   const AqbxOptions& opt = {}) {
  if (!(eps > 0.0)) fail(ErrorKind::Domain, "compute_expansion: tolerance must be positive");
  std::vector<PreimageContext> ctx;
  for (int p : center.near)
    if (auto c = make_preimage_context(boundary, density, p, center.z0, opt.surrogate, opt.worst_root)) ctx.push_back(*c);
  auto estimate = [&](int nq, int m) {
    double s = 0.0;
    for (const auto& c : ctx) {
      const double ec = coeff_error_estimate(c, nq, m, center.r);
      s = opt.sum_estimates ? s + ec : std::max(s, ec);
    }
    return s;
  };

  Expansion e;
  e.center = center;
  e.kernel = kernel;
  e.tolerance = eps;
  int kappa = 1;
  detail::SourceBlock block;
  auto cap = [&](Termination t, const std::string& what) {
    if (!opt.flag_caps || e.coeffs.empty()) {
      std::ostringstream msg;
      msg << what << " at center " << center.base_global() << ", m = " << e.coeffs.size() << ", kappa = " << kappa;
      if (!e.coeffs.empty()) msg << ", |a_p| = " << e.coeffs.back().norm();
      fail(ErrorKind::ToleranceUnreachable, msg.str());
    }
    e.terminated_by = t;
  };
  for (int m = 0;; ++m) {
    if (m > opt.p_max) {
      cap(Termination::OrderCap, "expansion order cap reached");
      return e;
    }
    bool capped = false;
    for (;;) {
      const int nq = kappa * panel_order;
      const bool unreliable = opt.reliability && 2 * m > nq;
      if (!unreliable && estimate(nq, m) <= eps) break;
      if ((kappa + 1) * panel_order > opt.kappa_n_max) {
        cap(Termination::UpsamplingCap, "upsampling cap reached");
        capped = true;
        break;
      }
      ++kappa;
    }
    if (capped) return e;
    if (block.kappa != kappa) block = detail::make_block(cache, density, center, kappa);
    e.coeffs.push_back(detail::block_coefficient(block, kernel, center, m));
    e.kappa.push_back(kappa);
    e.coeff_estimate.push_back(estimate(kappa * panel_order, m));
    const double am = e.coeffs.back().norm();
    const bool done = opt.conservative ? (m >= 1 && std::max(am, e.coeffs[static_cast<std::size_t>(m) - 1].norm()) < eps)
                                       : am < eps;
    if (done) break;
  }
  e.terminated_by = Termination::Tolerance;
  return e;
}

/// Fixed-parameter QBX: a_0..a_p all computed at upsampling rate kappa.
inline Expansion compute_expansion_fixed(const PanelCache& cache, const Density& density, const KernelSpec& kernel,
                                         const ExpansionCenter& center, int p, int kappa) {
  if (p < 0 || p > max_expansion_order) fail(ErrorKind::OrderCap, "fixed expansion order out of range");
  Expansion e;
  e.center = center;
  e.kernel = kernel;
  auto block = detail::make_block(cache, density, center, kappa);
  for (int m = 0; m <= p; ++m) {
    e.coeffs.push_back(detail::block_coefficient(block, kernel, center, m));
    e.kappa.push_back(kappa);
  }
  e.terminated_by = Termination::Fixed;
  return e;
}

/// B_0(z)..B_p(z) for one target.
inline std::vector<CoefficientTerm> addition_B_sequence(const KernelSpec& spec, int p, cplx z, cplx z0, double r) {
  const cplx zeta = z - z0;
  if (std::abs(zeta) > r * (1.0 + 1e-12)) fail(ErrorKind::OutsideDisc, "target outside the expansion disc");
  std::vector<CoefficientTerm> B(static_cast<std::size_t>(p) + 1);
  const cplx ratio = zeta / r;
  if (!spec.is_helmholtz()) {
    cplx pw = 1.0;
    for (int m = 0; m <= p; ++m, pw *= ratio) B[static_cast<std::size_t>(m)] = {m, 1, {pw, 0.0}};
    return B;
  }
  std::vector<double> jhat(static_cast<std::size_t>(p) + 1);
  bessel_j_normalized_sequence(spec.k * std::abs(zeta), p, jhat);
  cplx pp = 1.0, pn = 1.0;
  B[0] = {0, 1, {jhat[0], 0.0}};
  for (int m = 1; m <= p; ++m) {
    pp *= ratio;
    pn *= -std::conj(ratio);
    const double s = jhat[static_cast<std::size_t>(m)] / std::numbers::sqrt2;
    B[static_cast<std::size_t>(m)] = {m, 2, {s * pp, s * pn}};
  }
  return B;
}

struct ExpansionValue {
  cplx value;
  int terms = 0;  // index of the last term added
};

/// Algorithm 2: sum a_m B_m(z) until the term (pair) falls below eps.
inline ExpansionValue evaluate_expansion(const Expansion& e, cplx z, double eps, bool conservative = true) {
  const int p = e.order();
  const auto B = addition_B_sequence(e.kernel, p, z, e.center.z0, e.center.r);
  ExpansionValue out;
  double prev = std::numeric_limits<double>::infinity();
  for (int m = 0; m <= p; ++m) {
    const cplx d = dot(e.coeffs[static_cast<std::size_t>(m)], B[static_cast<std::size_t>(m)]);
    out.value += d;
    out.terms = m;
    const double dm = std::abs(d);
    if (conservative ? (m >= 1 && std::max(prev, dm) < eps) : dm < eps) break;
    prev = dm;
  }
  return out;
}

/// Partial sums sum_{m<=q} a_m B_m(z) for q = 0..p.
inline std::vector<cplx> expansion_partial_sums(const Expansion& e, cplx z) {
  const auto B = addition_B_sequence(e.kernel, e.order(), z, e.center.z0, e.center.r);
  std::vector<cplx> s;
  cplx acc = 0.0;
  for (std::size_t m = 0; m < B.size(); ++m) s.push_back(acc += dot(e.coeffs[m], B[m]));
  return s;
}

/// Plain composite quadrature at z over the listed panels (all when empty).
inline cplx direct_eval_at(const Boundary& boundary, const Density& density, const KernelSpec& kernel, cplx z,
                           std::span<const int> panels = {}) {
  cplx s = 0.0;
  auto add_panel = [&](int p) {
    const Panel& pan = boundary.panel(p);
    const auto sig = density.panel_values(p);
    for (int i = 0; i < pan.order(); ++i) {
      const auto ii = static_cast<std::size_t>(i);
      s += kernel_value(kernel, z, pan.nodes_z[ii], pan.normals[ii]) * sig[ii] * pan.quad_weights[ii] *
           std::abs(pan.nodes_dz[ii]);
    }
  };
  if (panels.empty())
    for (int p = 0; p < boundary.num_panels(); ++p) add_panel(p);
  else
    for (int p : panels) add_panel(p);
  return s;
}

/// Direct quadrature over all panels except `skip`.
inline cplx direct_eval_far(const Boundary& boundary, const Density& density, const KernelSpec& kernel, cplx z,
                            std::span<const int> skip) {
  std::vector<int> far;
  for (int p = 0; p < boundary.num_panels(); ++p)
    if (std::find(skip.begin(), skip.end(), p) == skip.end()) far.push_back(p);
  if (far.empty()) return 0.0;
  return direct_eval_at(boundary, density, kernel, z, far);
}

inline std::vector<cplx> direct_eval(const Boundary& boundary, const Density& density, const KernelSpec& kernel,
                                     std::span<const cplx> targets) {
  std::vector<cplx> out;
  out.reserve(targets.size());
  for (const cplx& z : targets) out.push_back(direct_eval_at(boundary, density, kernel, z));
  return out;
}

/// Local QBX at z with a computed expansion: direct far part plus the near
/// expansion.
inline cplx local_qbx_value(const Boundary& boundary, const Density& density, const Expansion& e, cplx z, double eps) {
  return direct_eval_far(boundary, density, e.kernel, z, e.center.near) + evaluate_expansion(e, z, eps).value;
}

/// Summed potential error estimate for direct quadrature at z over the
/// near panels of z.
inline double direct_error_estimate(const Boundary& boundary, const Density& density, const KernelSpec& kernel, cplx z,
                                    int near_count = default_near_count,
                                    SigmaSurrogate surrogate = SigmaSurrogate::PanelMaxNorm) {
  double s = 0.0;
  for (int p : nearest_panels(boundary, z, std::min(near_count, boundary.num_panels())))
    if (auto c = make_preimage_context(boundary, density, p, z, surrogate)) s += potential_error_estimate(kernel, *c);
  return s;
}

struct FieldPoint {
  cplx value;
  bool activated = false;
  bool ad_hoc = false;
  double estimate = 0.0;
  int order = 0;
  double work = 0.0;
};

struct FieldOptions {
  double r_over_h = 0.25;
  int near_count = default_near_count;
  AqbxOptions aqbx;
};

/// Potential at arbitrary targets. Targets whose direct-quadrature error
/// estimate is below eps are summed directly; the rest use the closest
/// node-normal center on their side whose disc contains them, or else a
/// center placed on the normal through their closest boundary point.
inline std::vector<FieldPoint> evaluate_field(const Boundary& boundary, const Density& density, const KernelSpec& kernel,
                                              std::span<const cplx> targets, double eps, const FieldOptions& fo = {}) {
  const PanelCache cache(boundary);
  std::vector<ExpansionCenter> grid[2];
  std::vector<std::unique_ptr<Expansion>> expansions[2];
  const double offset = fo.r_over_h * boundary.h();
  std::vector<FieldPoint> out(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    const cplx z = targets[t];
    FieldPoint& fp = out[t];
    fp.estimate = direct_error_estimate(boundary, density, kernel, z, fo.near_count, fo.aqbx.surrogate);
    if (fp.estimate < eps) {
      fp.value = direct_eval_at(boundary, density, kernel, z);
      continue;
    }
    fp.activated = true;
    const ClosestPoint cp = closest_boundary_point(boundary, z);
    const double along = std::real((z - cp.point) * std::conj(cp.normal));
    const double inward = inward_normal_sign(boundary);
    const Side side = (along * inward >= 0.0) ? Side::Interior : Side::Exterior;
    const int s = side == Side::Interior ? 0 : 1;
    if (grid[s].empty()) {
      grid[s] = place_centers(boundary, fo.r_over_h, side, fo.near_count);
      expansions[s].resize(grid[s].size());
    }
    int best = -1;
    double best_d = std::numeric_limits<double>::infinity();
    for (int p : nearest_panels(boundary, z, std::min(3, boundary.num_panels())))
      for (int i = 0; i < panel_order; ++i) {
        const ExpansionCenter& c = grid[s][static_cast<std::size_t>(p * panel_order + i)];
        const double d = std::abs(z - c.z0);
        if (d <= c.r && d < best_d) best_d = d, best = p * panel_order + i;
      }
    const Expansion* e = nullptr;
    Expansion adhoc;
    if (best >= 0) {
      auto& slot = expansions[s][static_cast<std::size_t>(best)];
      if (!slot)
        slot = std::make_unique<Expansion>(
            compute_expansion(boundary, cache, density, kernel, grid[s][static_cast<std::size_t>(best)], eps, fo.aqbx));
      e = slot.get();
    } else {
      ExpansionCenter c;
      c.side = side;
      c.z0 = cp.point + std::max(offset, cp.distance) * side_direction(boundary, side, cp.normal);
      const auto [node, dist] = nearest_node(boundary, c.z0);
      c.r = dist;
      c.base_panel = node / panel_order;
      c.base_node = node % panel_order;
      c.near = nearest_panels(boundary, c.z0, std::min(fo.near_count, boundary.num_panels()));
      if (std::abs(z - c.z0) > c.r) c.z0 = z, c.r = nearest_node(boundary, z).second;
      adhoc = compute_expansion(boundary, cache, density, kernel, c, eps, fo.aqbx);
      e = &adhoc;
      fp.ad_hoc = true;
    }
    fp.value = local_qbx_value(boundary, density, *e, z, eps);
    fp.order = e->order();
    fp.work = e->work();
  }
  return out;
}

/// Per-center diagnostics: id, p, kappa history, W, termination.
inline void write_diagnostics_csv(std::ostream& os, std::span<const Expansion> expansions) {
  os << "center,p,kappa_history,W,terminated_by\n";
  os.precision(17);
  for (const Expansion& e : expansions) {
    os << e.center.base_global() << ',' << e.order() << ',';
    for (std::size_t m = 0; m < e.kappa.size(); ++m) os << (m ? ";" : "") << e.kappa[m];
    os << ',' << e.work() << ',' << to_string(e.terminated_by) << '\n';
  }
}

}  // namespace aqbx

#endif
