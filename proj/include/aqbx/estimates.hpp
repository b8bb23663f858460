#ifndef AQBX_ESTIMATES_HPP
#define AQBX_ESTIMATES_HPP

// Gauss-Legendre remainder estimates for integrands with a pole at the
// complex preimage t0 of an expansion center or target.

#include <aqbx/density.hpp>
#include <aqbx/kernels.hpp>

namespace aqbx {

enum class SigmaSurrogate { PanelMaxNorm, Extrapolate };

struct PreimageContext {
  int panel = -1;
  cplx t0;
  cplx dgamma_t0;      // standardized frame
  cplx sigma_t0;       // density value (or surrogate) at t0
  double scale = 1.0;  // physical length of one standardized unit
};

namespace detail {

/// Root s of s^2 = t^2 - 1 with |t + s| >= 1.
inline cplx bernstein_root(cplx t) {
  if (t.imag() == 0.0 && std::abs(t.real()) <= 1.0)
    fail(ErrorKind::Singular, "remainder estimate: t0 lies on [-1, 1]");
  cplx s = std::sqrt(t * t - 1.0);
  if (std::abs(t + s) < 1.0) s = -s;
  return s;
}

/// log |k_n(t)/(2 pi)| = -(2n+1) log|t + s|.
inline double log_remainder_scale(cplx t, cplx s, int n) { return -(2.0 * n + 1.0) * std::log(std::abs(t + s)); }

}  // namespace detail

/// k_n(t) = 2 pi / (t + sqrt(t^2 - 1))^(2n+1) on the branch outside the unit disc.
inline cplx remainder_kn(cplx t0, int n) {
  const cplx s = detail::bernstein_root(t0);
  return 2.0 * pi * std::pow(t0 + s, -(2 * n + 1));
}

/// k_n^(m)(t0) ~ k_n(t0) (-(2n+1)/sqrt(t0^2 - 1))^m.
inline cplx remainder_kn_deriv(cplx t0, int n, int m) {
  const cplx s = detail::bernstein_root(t0);
  return 2.0 * pi * std::pow(t0 + s, -(2 * n + 1)) * std::pow(-(2.0 * n + 1.0) / s, m);
}

/// Preimage context of z0 with respect to a panel, or nothing when Newton
/// fails (the panel then counts as far). With `worst_root` both roots from
/// the endpoint starting guesses are tried and the one closest to [-1, 1]
/// in the Bernstein-ellipse sense is kept.
inline std::optional<PreimageContext> make_preimage_context(const Boundary& boundary, const Density& density,
                                                            int panel, cplx z0,
                                                            SigmaSurrogate surrogate = SigmaSurrogate::PanelMaxNorm,
                                                            bool worst_root = false) {
  const Panel& pan = boundary.panel(panel);
  std::optional<cplx> t0;
  if (worst_root) {
    double best = std::numeric_limits<double>::infinity();
    auto roots = find_preimage_candidates(pan, z0);
    if (auto t = try_find_preimage(pan, z0)) roots.push_back(*t);
    for (const cplx& t : roots) {
      if (t.imag() == 0.0 && std::abs(t.real()) <= 1.0) continue;
      const double rho = std::abs(t + detail::bernstein_root(t));
      if (rho < best) best = rho, t0 = t;
    }
  } else {
    t0 = try_find_preimage(pan, z0);
  }
  if (!t0) return std::nullopt;
  PreimageContext ctx;
  ctx.panel = panel;
  ctx.t0 = *t0;
  ctx.dgamma_t0 = eval_geometry_interpolant(pan, *t0).second;
  ctx.sigma_t0 =
      surrogate == SigmaSurrogate::PanelMaxNorm ? cplx(panel_max_norm(density, panel)) : extrapolate_at(density, panel, *t0);
  ctx.scale = standard_scale(pan);
  return ctx;
}

/// E_C(n, m) = (r^m/m!) |(2n+1)/(gamma'(t0) sqrt(t0^2-1))|^m |sigma(t0)| / |t0 + sqrt(t0^2-1)|^(2n+1),
/// with r the physical expansion radius.
inline double coeff_error_estimate(const PreimageContext& ctx, int n, int m, double r) {
  if (m < 0) fail(ErrorKind::Domain, "coeff_error_estimate: negative order");
  const double sig = std::abs(ctx.sigma_t0);
  if (sig == 0.0) return 0.0;
  const cplx s = detail::bernstein_root(ctx.t0);
  const double r_std = r / ctx.scale;
  const double growth = r_std * (2.0 * n + 1.0) / std::abs(ctx.dgamma_t0 * s);
  const double log_e = m * std::log(growth) - std::lgamma(m + 1.0) + detail::log_remainder_scale(ctx.t0, s, n) + std::log(sig);
  return std::exp(log_e);
}

/// Estimates of the direct-quadrature error of the potential at z0: the
/// modulus form (1/2pi)|sigma k_n| and the sharper Laplace form
/// (1/2pi)|Im[sigma k_n]|.
struct PotentialEstimate {
  double modulus = 0.0;
  double imaginary = 0.0;
};

inline PotentialEstimate potential_error_estimates(const PreimageContext& ctx, int n = panel_order) {
  const cplx v = ctx.sigma_t0 * remainder_kn(ctx.t0, n) / (2.0 * pi);
  return {std::abs(v), std::abs(v.imag())};
}

inline double potential_error_estimate(const KernelSpec& spec, const PreimageContext& ctx, int n = panel_order) {
  (void)spec;
  return potential_error_estimates(ctx, n).modulus;
}

}  // namespace aqbx

#endif
