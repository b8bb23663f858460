#ifndef AQBX_SOLVER_HPP
#define AQBX_SOLVER_HPP

// Nystrom discretizations, the two-sided AQBX operator, GMRES, and the
// point-source reference problems.

#include <aqbx/aqbx.hpp>

#include <Eigen/Dense>

#include <random>

namespace aqbx {

struct PointSource {
  cplx location;
  cplx strength;
};

/// Laplace: sum Re[c/(z - s)]; Helmholtz: sum c (i/4) H_0(k|z - s|).
inline cplx reference_field(const KernelSpec& kernel, std::span<const PointSource> sources, cplx z) {
  cplx u = 0.0;
  for (const auto& s : sources) {
    const cplx d = z - s.location;
    if (d == cplx(0.0)) fail(ErrorKind::Singular, "reference_field: target at a source");
    if (kernel.is_helmholtz())
      u += s.strength * cplx(0.0, 0.25) * hankel01(kernel.k * std::abs(d)).first;
    else
      u += std::real(s.strength / d);
  }
  return u;
}

struct BoundaryValueProblem {
  KernelSpec kernel;
  Boundary boundary;
  Side side = Side::Interior;  // where the solution lives
  std::vector<PointSource> sources;
  std::vector<cplx> f;          // Dirichlet data at the nodes
  std::uint64_t seed = 0;

  cplx exact(cplx z) const { return reference_field(kernel, sources, z); }
};

/// Scales the source strengths so that max |u| over the nodes is one and
/// samples the boundary data.
inline BoundaryValueProblem make_problem(const KernelSpec& kernel, Boundary boundary, Side side,
                                         std::vector<PointSource> sources, std::uint64_t seed = 0) {
  BoundaryValueProblem bvp{kernel, std::move(boundary), side, std::move(sources), {}, seed};
  double peak = 0.0;
  for (int i = 0; i < bvp.boundary.num_nodes(); ++i) peak = std::max(peak, std::abs(bvp.exact(bvp.boundary.node(i))));
  if (peak == 0.0) fail(ErrorKind::Domain, "make_problem: boundary data vanish identically");
  for (auto& s : bvp.sources) s.strength /= peak;
  for (int i = 0; i < bvp.boundary.num_nodes(); ++i) bvp.f.push_back(bvp.exact(bvp.boundary.node(i)));
  return bvp;
}

/// Exterior Helmholtz problem with wavenumber k and `count` random sources
/// on the circle |z| = radius inside the obstacle.
inline BoundaryValueProblem helmholtz_problem(Boundary b, double k, std::uint64_t seed, int count = 5,
                                              double radius = 0.2) {
  const KernelSpec kernel = KernelSpec::helmholtz(k);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * pi), unit(-1.0, 1.0);
  std::vector<PointSource> src;
  for (int j = 0; j < count; ++j) {
    const double a = angle(rng);
    const double re = unit(rng), im = unit(rng);
    src.push_back({std::polar(radius, a), cplx(re, im)});
  }
  return make_problem(kernel, std::move(b), Side::Exterior, std::move(src), seed);
}

/// Interior Laplace problem with `count` random sources between the radii
/// r_min and r_max outside the domain.
inline BoundaryValueProblem laplace_problem(Boundary b, std::uint64_t seed, int count = 5, double r_min = 1.5,
                                            double r_max = 2.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 2.0 * pi), rad(r_min, r_max), unit(-1.0, 1.0);
  std::vector<PointSource> src;
  for (int j = 0; j < count; ++j) {
    const double a = angle(rng), rr = rad(rng);
    const double re = unit(rng), im = unit(rng);
    src.push_back({std::polar(rr, a), cplx(re, im)});
  }
  return make_problem(KernelSpec::laplace(), std::move(b), Side::Interior, std::move(src), seed);
}

/// The reference problem: exterior of the clockwise starfish, k = c/h.
inline BoundaryValueProblem helmholtz_reference_problem(int n_panels, double c, std::uint64_t seed, int count = 5,
                                                        double radius = 0.2) {
  Boundary b = build_boundary(starfish(), n_panels);
  const double k = c / b.h();
  return helmholtz_problem(std::move(b), k, seed, count, radius);
}

/// Interior of the counter-clockwise starfish.
inline BoundaryValueProblem laplace_reference_problem(int n_panels, std::uint64_t seed, int count = 5) {
  return laplace_problem(build_boundary(starfish(0.3, 5, false), n_panels), seed, count);
}

/// One source at distance d from the starfish tip gamma(0), inside the
/// obstacle, for the exterior Helmholtz problem.
inline BoundaryValueProblem helmholtz_close_source_problem(int n_panels, double c, double d) {
  Boundary b = build_boundary(starfish(), n_panels);
  const KernelSpec kernel = KernelSpec::helmholtz(c / b.h());
  const ParametrizedCurve& cv = b.curve;
  const cplx tip = cv.position(0.0);
  const cplx n = cplx(0.0, 1.0) * cv.derivative(0.0) / std::abs(cv.derivative(0.0));
  const cplx into_obstacle = side_direction(b, Side::Interior, n);
  std::vector<PointSource> src{{tip + d * into_obstacle, 1.0}};
  return make_problem(kernel, std::move(b), Side::Exterior, std::move(src));
}

using DenseC = Eigen::MatrixXcd;
using VectorC = Eigen::VectorXcd;

inline VectorC to_eigen(std::span<const cplx> v) {
  VectorC x(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) x(static_cast<Eigen::Index>(i)) = v[i];
  return x;
}

inline std::vector<cplx> from_eigen(const VectorC& x) { return {x.data(), x.data() + x.size()}; }

/// Rejects boundaries where a node of a non-adjacent panel lies within h/2
/// of a panel's nodes.
inline void check_self_contact(const Boundary& b) {
  const int np = b.num_panels();
  const double h = b.h();
  for (int p = 0; p < np; ++p)
    for (int q = 0; q < np; ++q) {
      const int gap = std::min((p - q + np) % np, (q - p + np) % np);
      if (gap <= 1) continue;
      for (const cplx& z : b.panel(q).nodes_z)
        if (distance_to_panel_nodes(b.panel(p), z) < 0.5 * h)
          fail(ErrorKind::Unsupported, "boundary has near self-contact between panels " + std::to_string(p) + " and " +
                                           std::to_string(q));
    }
}

/// Laplace double-layer matrix D with the smooth on-surface limit on the
/// diagonal, Im[gamma''/gamma'] w/(4 pi).
inline Eigen::MatrixXd laplace_dlp_matrix(const Boundary& b) {
  check_self_contact(b);
  const int N = b.num_nodes();
  Eigen::MatrixXd D(N, N);
  for (int i = 0; i < N; ++i) {
    const cplx x = b.node(i);
    for (int pj = 0; pj < b.num_panels(); ++pj) {
      const Panel& pan = b.panel(pj);
      for (int jj = 0; jj < pan.order(); ++jj) {
        const int j = pj * panel_order + jj;
        if (j == i) continue;
        const auto js = static_cast<std::size_t>(jj);
        D(i, j) = std::real(pan.normals[js] / (x - pan.nodes_z[js])) / (2.0 * pi) * pan.quad_weights[js] *
                  std::abs(pan.nodes_dz[js]);
      }
    }
  }
  for (int pj = 0; pj < b.num_panels(); ++pj) {
    const Panel& pan = b.panel(pj);
    const auto d2 = legendre_derivative_coeffs<cplx>(pan.geom_dcoeffs);
    for (int jj = 0; jj < pan.order(); ++jj) {
      const auto js = static_cast<std::size_t>(jj);
      const double s = gauss_legendre(panel_order).nodes[js];
      const cplx g1 = legendre_series<cplx, double>(pan.geom_dcoeffs, s);
      const cplx g2 = legendre_series<cplx, double>(d2, s);
      const int j = pj * panel_order + jj;
      D(j, j) = std::imag(g2 / g1) * pan.quad_weights[js] / (4.0 * pi);
    }
  }
  return D;
}

/// (1/2) I + D for the interior Dirichlet problem with inward normal.
inline Eigen::MatrixXd laplace_nystrom_matrix(const Boundary& b) {
  Eigen::MatrixXd A = laplace_dlp_matrix(b);
  A.diagonal().array() += 0.5;
  return A;
}

/// Direct-quadrature matrix G_ij = K(x_i, w_j) W_j with zero diagonal.
inline DenseC direct_matrix(const Boundary& b, const KernelSpec& kernel) {
  const int N = b.num_nodes();
  DenseC G(N, N);
  for (int pj = 0; pj < b.num_panels(); ++pj) {
    const Panel& pan = b.panel(pj);
    for (int jj = 0; jj < pan.order(); ++jj) {
      const int j = pj * panel_order + jj;
      const auto js = static_cast<std::size_t>(jj);
      const double W = pan.quad_weights[js] * std::abs(pan.nodes_dz[js]);
      for (int i = 0; i < N; ++i) G(i, j) = i == j ? cplx(0.0) : kernel_value(kernel, b.node(i), pan.nodes_z[js], pan.normals[js]) * W;
    }
  }
  return G;
}

struct GmresResult {
  std::vector<cplx> x;
  int iterations = 0;
  std::vector<double> residuals;  // relative residual after each iteration
};

/// Unrestarted GMRES with modified Gram-Schmidt and Givens rotations, from
/// a zero initial guess; stops when the relative residual drops below tol.
inline GmresResult gmres(const std::function<std::vector<cplx>(const std::vector<cplx>&)>& apply,
                         const std::vector<cplx>& rhs, double tol, int max_iter = 400) {
  const std::size_t n = rhs.size();
  auto norm = [](const std::vector<cplx>& v) {
    double s = 0.0;
    for (const cplx& x : v) s += std::norm(x);
    return std::sqrt(s);
  };
  GmresResult res;
  res.x.assign(n, 0.0);
  const double beta = norm(rhs);
  if (beta == 0.0) return res;
  std::vector<std::vector<cplx>> V{rhs};
  for (cplx& x : V[0]) x /= beta;
  std::vector<std::vector<cplx>> H;  // columns of the Hessenberg matrix
  std::vector<cplx> cs, sn, g{beta};
  int k = 0;
  double rel = 1.0;
  while (rel >= tol) {
    if (k >= max_iter) {
      std::ostringstream msg;
      msg << "gmres: no convergence in " << max_iter << " iterations, relative residual " << rel;
      fail(ErrorKind::NonConvergence, msg.str());
    }
    std::vector<cplx> w = apply(V[static_cast<std::size_t>(k)]);
    std::vector<cplx> h(static_cast<std::size_t>(k) + 2, 0.0);
    for (int i = 0; i <= k; ++i) {
      const auto& vi = V[static_cast<std::size_t>(i)];
      cplx d = 0.0;
      for (std::size_t q = 0; q < n; ++q) d += std::conj(vi[q]) * w[q];
      h[static_cast<std::size_t>(i)] = d;
      for (std::size_t q = 0; q < n; ++q) w[q] -= d * vi[q];
    }
    const double hn = norm(w);
    h[static_cast<std::size_t>(k) + 1] = hn;
    for (int i = 0; i < k; ++i) {
      const auto ii = static_cast<std::size_t>(i);
      const cplx t = cs[ii] * h[ii] + sn[ii] * h[ii + 1];
      h[ii + 1] = -std::conj(sn[ii]) * h[ii] + cs[ii] * h[ii + 1];
      h[ii] = t;
    }
    const auto kk = static_cast<std::size_t>(k);
    const double a = std::abs(h[kk]), rr = std::hypot(a, hn);
    const cplx c = rr == 0.0 ? cplx(1.0) : cplx(a / rr);
    const cplx s = rr == 0.0 ? cplx(0.0) : (a == 0.0 ? cplx(1.0) : h[kk] / a) * hn / rr;
    cs.push_back(c);
    sn.push_back(s);
    h[kk] = c * h[kk] + s * h[kk + 1];
    h[kk + 1] = 0.0;
    g.push_back(-std::conj(s) * g[kk]);
    g[kk] = c * g[kk];
    H.push_back(std::move(h));
    ++k;
    rel = std::abs(g[kk + 1]) / beta;
    res.residuals.push_back(rel);
    if (hn == 0.0) break;
    for (cplx& x : w) x /= hn;
    V.push_back(std::move(w));
  }
  std::vector<cplx> y(static_cast<std::size_t>(k));
  for (int i = k - 1; i >= 0; --i) {
    const auto ii = static_cast<std::size_t>(i);
    cplx s = g[ii];
    for (int j = i + 1; j < k; ++j) s -= H[static_cast<std::size_t>(j)][ii] * y[static_cast<std::size_t>(j)];
    y[ii] = s / H[ii][ii];
  }
  for (int i = 0; i < k; ++i)
    for (std::size_t q = 0; q < n; ++q) res.x[q] += y[static_cast<std::size_t>(i)] * V[static_cast<std::size_t>(i)][q];
  res.iterations = k;
  return res;
}

/// (1/2) I + PV of D - (ik/2) S on the boundary nodes, with the principal
/// value taken as the average of AQBX evaluations from both sides.
class TwoSidedOperator {
 public:
  TwoSidedOperator(const Boundary& b, const KernelSpec& kernel, double eps, double r_over_h = 0.25,
                   AqbxOptions opt = {})
      : b_(b), kernel_(kernel), eps_(eps), opt_(opt), cache_(b), G_(direct_matrix(b, kernel)) {
    opt_.flag_caps = true;
    centers_[0] = covering_base_nodes(b, place_centers(b, r_over_h, Side::Interior));
    centers_[1] = covering_base_nodes(b, place_centers(b, r_over_h, Side::Exterior));
  }

  int size() const { return b_.num_nodes(); }
  const DenseC& direct() const { return G_; }
  const std::vector<ExpansionCenter>& centers(Side s) const { return centers_[s == Side::Interior ? 0 : 1]; }

  /// One-sided limits u at every node from centers on side s.
  std::vector<cplx> one_sided(const Density& sigma, const VectorC& Gs, Side s, WorkCounter* work = nullptr) const {
    const auto& cs = centers(s);
    std::vector<cplx> u(cs.size());
    const auto& vals = sigma.values();
    for (std::size_t i = 0; i < cs.size(); ++i) {
      const ExpansionCenter& c = cs[i];
      const Expansion e = compute_expansion(b_, cache_, sigma, kernel_, c, eps_, opt_);
      if (work) work->add(e);
      const int row = c.base_global();
      cplx far = Gs(row);
      for (int p : c.near)
        for (int j = p * panel_order; j < (p + 1) * panel_order; ++j) far -= G_(row, j) * vals[static_cast<std::size_t>(j)];
      u[i] = far + evaluate_expansion(e, b_.node(row), eps_).value;
    }
    return u;
  }

  std::vector<cplx> apply(const std::vector<cplx>& x) const {
    const Density sigma(b_.num_panels(), x);
    const VectorC Gs = G_ * to_eigen(x);
    const auto ui = one_sided(sigma, Gs, Side::Interior);
    const auto ue = one_sided(sigma, Gs, Side::Exterior);
    std::vector<cplx> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = 0.5 * x[i] + 0.5 * (ui[i] + ue[i]);
    return y;
  }

 private:
  const Boundary& b_;
  KernelSpec kernel_;
  double eps_;
  AqbxOptions opt_;
  PanelCache cache_;
  DenseC G_;
  std::vector<ExpansionCenter> centers_[2];
};

/// Rows of the one-sided limit operator from fixed-order QBX at the node
/// centers of side s: the far panels by direct quadrature, the near panels
/// through a p-term expansion with kappa-fold upsampling.
inline DenseC qbx_limit_matrix(const Boundary& b, const KernelSpec& kernel, const DenseC& G, Side side, double r_over_h,
                               int p, int kappa) {
  const PanelCache cache(b);
  const auto centers = covering_base_nodes(b, place_centers(b, r_over_h, side));
  const int nq = kappa * panel_order;
  const DenseMatrix& L = interpolation_matrix(panel_order, nq);
  DenseC K = G;
  std::vector<cplx> pos, neg;
  for (const ExpansionCenter& c : centers) {
    const int row = c.base_global();
    const auto B = addition_B_sequence(kernel, p, b.node(row), c.z0, c.r);
    for (int pn : c.near) {
      for (int j = pn * panel_order; j < (pn + 1) * panel_order; ++j) K(row, j) = 0.0;
      const UpsampledPanel& up = cache.get(pn, kappa);
      for (int q = 0; q < nq; ++q) {
        const auto qs = static_cast<std::size_t>(q);
        cplx kq = 0.0;
        if (kernel.is_helmholtz()) {
          pos.resize(static_cast<std::size_t>(p) + 2);
          neg.resize(static_cast<std::size_t>(p) + 2);
          graf_terms(kernel.k, up.z[qs], c.z0, p + 1, pos, neg);
          kq = helmholtz_c(kernel.k, up.normal[qs], pos, neg, 0) * B[0].v[0];
          for (int m = 1; m <= p; ++m) {
            const double sc = helmholtz_a_scale(kernel.k, c.r, m);
            const auto& Bm = B[static_cast<std::size_t>(m)];
            kq += sc * (helmholtz_c(kernel.k, up.normal[qs], pos, neg, m) * Bm.v[0] +
                        helmholtz_c(kernel.k, up.normal[qs], pos, neg, -m) * Bm.v[1]);
          }
        } else {
          const cplx d = up.z[qs] - c.z0;
          cplx a = -up.normal[qs] / (2.0 * pi * d);
          for (int m = 0; m <= p; ++m, a *= c.r / d) kq += a * B[static_cast<std::size_t>(m)].v[0];
        }
        kq *= up.weight[qs];
        for (int i = 0; i < panel_order; ++i) K(row, pn * panel_order + i) += kq * L(q, i);
      }
    }
  }
  return K;
}

struct ReferenceSolveOptions {
  double r_over_h = 0.25;
  int p = 24;
  int kappa = 6;
};

/// Density of the Helmholtz problem from a dense two-sided fixed-order QBX
/// Nystrom matrix solved by LU.
inline Density reference_density(const BoundaryValueProblem& bvp, const ReferenceSolveOptions& o = {}) {
  const Boundary& b = bvp.boundary;
  if (!bvp.kernel.is_helmholtz()) {
    const Eigen::MatrixXd A = laplace_nystrom_matrix(b);
    Eigen::VectorXd f(b.num_nodes());
    for (int i = 0; i < b.num_nodes(); ++i) f(i) = bvp.f[static_cast<std::size_t>(i)].real();
    const Eigen::VectorXd s = A.partialPivLu().solve(f);
    std::vector<cplx> v(s.data(), s.data() + s.size());
    return Density(b.num_panels(), std::move(v));
  }
  const DenseC G = direct_matrix(b, bvp.kernel);
  DenseC A = 0.5 * (qbx_limit_matrix(b, bvp.kernel, G, Side::Interior, o.r_over_h, o.p, o.kappa) +
                    qbx_limit_matrix(b, bvp.kernel, G, Side::Exterior, o.r_over_h, o.p, o.kappa));
  A.diagonal().array() += 0.5;
  const VectorC x = A.partialPivLu().solve(to_eigen(bvp.f));
  return Density(b.num_panels(), from_eigen(x));
}

/// Max relative error of direct evaluation on the circle |z| = radius
/// (nsamples points) against the exact field.
inline double far_field_error(const BoundaryValueProblem& bvp, const Density& sigma, double radius = 2.0,
                              int nsamples = 200) {
  double err = 0.0, peak = 0.0;
  for (int j = 0; j < nsamples; ++j) {
    const cplx z = std::polar(radius, 2.0 * pi * j / nsamples);
    cplx u = direct_eval_at(bvp.boundary, sigma, bvp.kernel, z);
    if (!bvp.kernel.is_helmholtz()) u = u.real();
    const cplx ex = bvp.exact(z);
    err = std::max(err, std::abs(u - ex));
    peak = std::max(peak, std::abs(ex));
  }
  return err / peak;
}

struct SolveReport {
  int iterations = 0;
  double eval_error = 0.0;  // relative, on the radius-2 circle
  double resolution = 0.0;
  std::vector<double> residuals;
};

/// GMRES on the two-sided AQBX operator.
inline std::pair<Density, SolveReport> solve(const BoundaryValueProblem& bvp, double gmres_tol, double aqbx_tol,
                                             double r_over_h = 0.25, int max_iter = 400) {
  if (!bvp.kernel.is_helmholtz()) fail(ErrorKind::Unsupported, "solve: AQBX solves are implemented for Helmholtz");
  if (aqbx_tol > gmres_tol) fail(ErrorKind::Domain, "solve: AQBX tolerance must not exceed the GMRES tolerance");
  const TwoSidedOperator op(bvp.boundary, bvp.kernel, aqbx_tol, r_over_h);
  GmresResult g = gmres([&](const std::vector<cplx>& x) { return op.apply(x); }, bvp.f, gmres_tol, max_iter);
  Density sigma(bvp.boundary.num_panels(), std::move(g.x));
  SolveReport rep;
  rep.iterations = g.iterations;
  rep.residuals = std::move(g.residuals);
  rep.eval_error = far_field_error(bvp, sigma);
  rep.resolution = resolution_estimate(sigma);
  return {std::move(sigma), rep};
}

}  // namespace aqbx

#endif
