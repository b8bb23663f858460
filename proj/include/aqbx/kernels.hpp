#ifndef AQBX_KERNELS_HPP
#define AQBX_KERNELS_HPP

// Laplace double layer and Helmholtz combined field kernels, and their
// normalized addition-theorem factors A_m (source side) and B_m (target side).

#include <aqbx/special.hpp>

#include <array>
#include <numbers>

namespace aqbx {

enum class KernelKind { LaplaceDLP, HelmholtzCFIE };

struct KernelSpec {
  KernelKind kind = KernelKind::LaplaceDLP;
  double k = 0.0;

  static KernelSpec laplace() { return {}; }
  static KernelSpec helmholtz(double wavenumber) {
    if (!(wavenumber > 0.0)) fail(ErrorKind::Domain, "helmholtz kernel needs a positive wavenumber");
    return {KernelKind::HelmholtzCFIE, wavenumber};
  }
  bool is_helmholtz() const { return kind == KernelKind::HelmholtzCFIE; }
  /// Weight of the single layer in D - (ik/2) S.
  cplx combination() const { return is_helmholtz() ? cplx(0.0, -0.5 * k) : cplx(0.0); }
};

inline constexpr int max_expansion_order = 60;

/// One expansion term: a scalar for Laplace and for m = 0, otherwise the
/// (+m, -m) pair.
struct CoefficientTerm {
  int m = 0;
  int size = 1;
  std::array<cplx, 2> v{};

  double norm() const { return size == 1 ? std::abs(v[0]) : std::hypot(std::abs(v[0]), std::abs(v[1])); }
  CoefficientTerm& operator+=(const CoefficientTerm& o) {
    v[0] += o.v[0];
    v[1] += o.v[1];
    return *this;
  }
};

inline cplx dot(const CoefficientTerm& a, const CoefficientTerm& b) {
  return a.size == 1 ? a.v[0] * b.v[0] : a.v[0] * b.v[0] + a.v[1] * b.v[1];
}

/// Kernel of the layer potential with respect to arc length at w. For
/// Laplace the potential is the real part of the accumulated value.
inline cplx kernel_value(const KernelSpec& spec, cplx z, cplx w, cplx n_w) {
  const cplx d = z - w;
  if (d == cplx(0.0)) fail(ErrorKind::Singular, "kernel_value: target coincides with source");
  if (!spec.is_helmholtz()) return n_w / (2.0 * pi * d);
  const double rho = std::abs(d);
  const auto [h0, h1] = hankel01(spec.k * rho);
  const double k = spec.k;
  return cplx(0.0, 0.25 * k) * h1 * rho * std::real(n_w / d) + (k / 8.0) * h0;
}

/// Source-side Graf terms G(j) = H_j(k r_w) e^j, e = conj(w - z0)/r_w, for
/// 0 <= j <= max_order into `pos`, and G(-j) = (-1)^j H_j conj(e)^j into `neg`.
inline void graf_terms(double k, cplx w, cplx z0, int max_order, std::span<cplx> pos, std::span<cplx> neg) {
  const cplx d = w - z0;
  const double rw = std::abs(d);
  if (rw == 0.0) fail(ErrorKind::Singular, "graf_terms: source coincides with the center");
  const auto M = static_cast<std::size_t>(max_order);
  thread_local std::vector<double> J, Y;
  J.resize(M + 1);
  Y.resize(M + 1);
  bessel_jy_sequence(k * rw, max_order, J, Y);
  const cplx e = std::conj(d) / rw;
  cplx ep = 1.0;
  for (std::size_t j = 0; j <= M; ++j) {
    const cplx h(J[j], Y[j]);
    pos[j] = h * ep;
    neg[j] = (j % 2 ? -1.0 : 1.0) * h * std::conj(ep);
    ep *= e;
  }
}

/// c_j = D_j - (ik/2) S_j from Graf terms covering orders |j| - 1 .. |j| + 1.
inline cplx helmholtz_c(double k, cplx n, std::span<const cplx> pos, std::span<const cplx> neg, int j) {
  auto G = [&](int i) { return i >= 0 ? pos[static_cast<std::size_t>(i)] : neg[static_cast<std::size_t>(-i)]; };
  return cplx(0.0, k / 8.0) * (G(j - 1) * std::conj(n) - G(j + 1) * n) + (k / 8.0) * G(j);
}

/// Normalization (sqrt2/m!)(kr/2)^m of the Helmholtz A_m, m > 0.
inline double helmholtz_a_scale(double k, double r, int m) {
  return std::exp(0.5 * std::log(2.0) + m * std::log(0.5 * k * r) - std::lgamma(m + 1.0));
}

inline CoefficientTerm addition_A(const KernelSpec& spec, int m, cplx w, cplx n_w, cplx z0, double r) {
  if (m < 0) fail(ErrorKind::Domain, "addition_A: negative order");
  const cplx d = w - z0;
  if (d == cplx(0.0)) fail(ErrorKind::Singular, "addition_A: source coincides with the center");
  CoefficientTerm t;
  t.m = m;
  if (!spec.is_helmholtz()) {
    t.v[0] = -std::pow(r, m) * n_w / (2.0 * pi * std::pow(d, m + 1));
    return t;
  }
  if (m > max_expansion_order) fail(ErrorKind::OrderCap, "addition_A: order exceeds 60");
  std::vector<cplx> pos(static_cast<std::size_t>(m) + 2), neg(static_cast<std::size_t>(m) + 2);
  graf_terms(spec.k, w, z0, m + 1, pos, neg);
  if (m == 0) {
    t.v[0] = helmholtz_c(spec.k, n_w, pos, neg, 0);
    return t;
  }
  const double scale = helmholtz_a_scale(spec.k, r, m);
  t.size = 2;
  t.v = {scale * helmholtz_c(spec.k, n_w, pos, neg, m), scale * helmholtz_c(spec.k, n_w, pos, neg, -m)};
  return t;
}

inline CoefficientTerm addition_B(const KernelSpec& spec, int m, cplx z, cplx z0, double r) {
  if (m < 0) fail(ErrorKind::Domain, "addition_B: negative order");
  const cplx zeta = z - z0;
  if (std::abs(zeta) > r * (1.0 + 1e-12)) fail(ErrorKind::OutsideDisc, "addition_B: target outside the expansion disc");
  CoefficientTerm t;
  t.m = m;
  const cplx ratio = zeta / r;
  if (!spec.is_helmholtz()) {
    t.v[0] = std::pow(ratio, m);
    return t;
  }
  if (m > max_expansion_order) fail(ErrorKind::OrderCap, "addition_B: order exceeds 60");
  std::vector<double> jhat(static_cast<std::size_t>(m) + 1);
  bessel_j_normalized_sequence(spec.k * std::abs(zeta), m, jhat);
  const double jm = jhat[static_cast<std::size_t>(m)];
  if (m == 0) {
    t.v[0] = jm;
    return t;
  }
  t.size = 2;
  t.v = {std::pow(ratio, m) * jm / std::numbers::sqrt2, std::pow(-std::conj(ratio), m) * jm / std::numbers::sqrt2};
  return t;
}

/// Sum_{m<=p} A_m B_m; tends to kernel_value as p grows.
inline cplx reconstruct_kernel(const KernelSpec& spec, int p, cplx z, cplx w, cplx n_w, cplx z0, double r) {
  if (!(r > 0.0) || std::abs(z - z0) > r * (1.0 + 1e-12) || std::abs(w - z0) < r * (1.0 - 1e-12))
    fail(ErrorKind::Domain, "reconstruct_kernel: need |z - z0| <= r <= |w - z0|");
  cplx s = 0.0;
  for (int m = 0; m <= p; ++m) s += dot(addition_A(spec, m, w, n_w, z0, r), addition_B(spec, m, z, z0, r));
  return s;
}

}  // namespace aqbx

#endif
