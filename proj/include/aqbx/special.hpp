#ifndef AQBX_SPECIAL_HPP
#define AQBX_SPECIAL_HPP

// Quadrature and special-function primitives: Gauss-Legendre rules,
// Legendre polynomials (real or complex argument) and integer-order
// Bessel/Neumann/Hankel functions of real positive argument.

#include <aqbx/error.hpp>

#include <array>
#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace aqbx {

using cplx = std::complex<double>;

inline constexpr double pi = std::numbers::pi;
inline constexpr double euler_gamma = std::numbers::egamma;
inline constexpr int max_rule_order = 128;

namespace detail {

inline const std::array<double, 171>& factorial_table() {
  static const std::array<double, 171> table = [] {
    std::array<double, 171> t{};
    t[0] = 1.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
    return t;
  }();
  return table;
}

}  // namespace detail

inline double factorial(int m) {
  if (m < 0 || m > 170) fail(ErrorKind::Domain, "factorial: argument out of range: " + std::to_string(m));
  return detail::factorial_table()[static_cast<std::size_t>(m)];
}

struct QuadratureRule {
  int order = 0;
  std::vector<double> nodes;
  std::vector<double> weights;
};

namespace detail {

inline QuadratureRule compute_gauss_legendre(int n) {
  QuadratureRule rule;
  rule.order = n;
  rule.nodes.assign(static_cast<std::size_t>(n), 0.0);
  rule.weights.assign(static_cast<std::size_t>(n), 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    // Chebyshev-like initial guess for the i-th largest root of P_n.
    double x = std::cos(pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int l = 1; l < n; ++l) {
        const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p0 = 1.0, p1 = x;
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) {
        // One more pass so that dp matches the final node.
        p0 = 1.0, p1 = x;
        for (int l = 1; l < n; ++l) {
          const double p2 = ((2.0 * l + 1.0) * x * p1 - l * p0) / (l + 1.0);
          p0 = p1;
          p1 = p2;
        }
        dp = n * (x * p1 - p0) / (x * x - 1.0);
        break;
      }
    }
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    const auto lo = static_cast<std::size_t>(i);
    const auto hi = static_cast<std::size_t>(n - 1 - i);
    rule.nodes[lo] = -x;
    rule.nodes[hi] = x;
    rule.weights[lo] = w;
    rule.weights[hi] = w;
  }
  if (n % 2 == 1) rule.nodes[static_cast<std::size_t>(n / 2)] = 0.0;
  return rule;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [-1, 1], nodes increasing. Rules are
/// computed once per order and shared.
inline const QuadratureRule& gauss_legendre(int n) {
  if (n < 1 || n > max_rule_order)
    fail(ErrorKind::Domain, "gauss_legendre: order out of range [1, 128]: " + std::to_string(n));
  static std::array<std::once_flag, max_rule_order + 1> flags;
  static std::array<QuadratureRule, max_rule_order + 1> rules;
  const auto idx = static_cast<std::size_t>(n);
  std::call_once(flags[idx], [&] { rules[idx] = detail::compute_gauss_legendre(n); });
  return rules[idx];
}

/// P_0(t)..P_lmax(t) by the three-term recurrence; valid for complex t.
template <class T>
void legendre_sequence(T t, int lmax, std::span<T> out) {
  out[0] = T(1);
  if (lmax >= 1) out[1] = t;
  for (int l = 1; l < lmax; ++l) {
    const auto li = static_cast<std::size_t>(l);
    out[li + 1] = ((2.0 * l + 1.0) * t * out[li] - double(l) * out[li - 1]) / (l + 1.0);
  }
}

template <class T>
std::vector<T> legendre_sequence(T t, int lmax) {
  if (lmax < 0) fail(ErrorKind::Domain, "legendre_sequence: negative degree");
  std::vector<T> out(static_cast<std::size_t>(lmax) + 1);
  legendre_sequence<T>(t, lmax, std::span<T>(out));
  return out;
}

/// Sum_l c_l P_l(t) together with its derivative, using
/// P'_{l+1} = P'_{l-1} + (2l+1) P_l.
template <class Coeff, class T>
std::pair<std::common_type_t<Coeff, T>, std::common_type_t<Coeff, T>> legendre_series_with_derivative(
    std::span<const Coeff> coeffs, T t) {
  using R = std::common_type_t<Coeff, T>;
  R value(0), deriv(0);
  if (coeffs.empty()) return {value, deriv};
  T p_prev(1), p(t);
  T dp_prev(0), dp(1);
  value = coeffs[0];
  if (coeffs.size() > 1) {
    value += coeffs[1] * p;
    deriv += coeffs[1] * dp;
  }
  for (std::size_t l = 1; l + 1 < coeffs.size(); ++l) {
    const double dl = static_cast<double>(l);
    const T p_next = ((2.0 * dl + 1.0) * t * p - dl * p_prev) / (dl + 1.0);
    const T dp_next = dp_prev + (2.0 * dl + 1.0) * p;
    p_prev = p;
    p = p_next;
    dp_prev = dp;
    dp = dp_next;
    value += coeffs[l + 1] * p;
    deriv += coeffs[l + 1] * dp;
  }
  return {value, deriv};
}

template <class Coeff, class T>
std::common_type_t<Coeff, T> legendre_series(std::span<const Coeff> coeffs, T t) {
  return legendre_series_with_derivative(coeffs, t).first;
}

/// Legendre coefficients of the derivative of sum_l c_l P_l, exact:
/// d_l = (2l+1) sum_{j>l, j-l odd} c_j.
template <class Coeff>
std::vector<Coeff> legendre_derivative_coeffs(std::span<const Coeff> coeffs) {
  const std::size_t n = coeffs.size();
  std::vector<Coeff> d(n, Coeff(0));
  if (n < 2) return d;
  // Running sums over j of fixed parity, from the top down.
  Coeff acc_even(0), acc_odd(0);
  for (std::size_t jj = n; jj-- > 1;) {
    if (jj % 2 == 0)
      acc_even += coeffs[jj];
    else
      acc_odd += coeffs[jj];
    const std::size_t l = jj - 1;
    d[l] = (2.0 * static_cast<double>(l) + 1.0) * ((l % 2 == 0) ? acc_odd : acc_even);
  }
  return d;
}


/// Legendre coefficients of the degree n-1 interpolant through values at
/// the nodes of `rule`: c_l = sum_m (2l+1)/2 P_l(t_m) w_m f(t_m).
template <class T>
std::vector<T> legendre_transform(std::span<const T> values, const QuadratureRule& rule) {
  const int n = rule.order;
  if (static_cast<int>(values.size()) != n) fail(ErrorKind::Domain, "legendre_transform: size mismatch");
  std::vector<T> coeffs(static_cast<std::size_t>(n), T(0));
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    legendre_sequence<double>(rule.nodes[mi], n - 1, std::span<double>(p));
    for (int l = 0; l < n; ++l) {
      const auto li = static_cast<std::size_t>(l);
      coeffs[li] += (0.5 * (2.0 * l + 1.0) * p[li] * rule.weights[mi]) * values[mi];
    }
  }
  return coeffs;
}

/// Row-major (rows x cols) real matrix.
struct DenseMatrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  double operator()(int i, int j) const { return data[static_cast<std::size_t>(i) * cols + j]; }
  double& operator()(int i, int j) { return data[static_cast<std::size_t>(i) * cols + j]; }
};

namespace detail {

inline DenseMatrix build_interpolation(int n, int target, bool derivative) {
  const QuadratureRule& src = gauss_legendre(n);
  const QuadratureRule& dst = gauss_legendre(target);
  DenseMatrix L{n, n, std::vector<double>(static_cast<std::size_t>(n) * n)};
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int m = 0; m < n; ++m) {
    legendre_sequence<double>(src.nodes[static_cast<std::size_t>(m)], n - 1, std::span<double>(p));
    for (int l = 0; l < n; ++l)
      L(l, m) = 0.5 * (2.0 * l + 1.0) * p[static_cast<std::size_t>(l)] * src.weights[static_cast<std::size_t>(m)];
  }
  DenseMatrix out{target, n, std::vector<double>(static_cast<std::size_t>(target) * n, 0.0)};
  std::vector<double> basis(static_cast<std::size_t>(n)), dbasis(static_cast<std::size_t>(n));
  for (int q = 0; q < target; ++q) {
    const double t = dst.nodes[static_cast<std::size_t>(q)];
    legendre_sequence<double>(t, n - 1, std::span<double>(basis));
    dbasis[0] = 0.0;
    if (n > 1) dbasis[1] = 1.0;
    for (int l = 1; l + 1 < n; ++l) {
      const auto li = static_cast<std::size_t>(l);
      dbasis[li + 1] = dbasis[li - 1] + (2.0 * l + 1.0) * basis[li];
    }
    const auto& b = derivative ? dbasis : basis;
    for (int j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int l = 0; l < n; ++l) acc += b[static_cast<std::size_t>(l)] * L(l, j);
      out(q, j) = acc;
    }
  }
  return out;
}

}  // namespace detail

/// Matrix mapping values at the n-point Gauss-Legendre nodes to the values
/// (or derivative) of their degree n-1 interpolant at the `target`-point
/// nodes. Cached per (n, target, derivative).
inline const DenseMatrix& interpolation_matrix(int n, int target, bool derivative = false) {
  if (n < 1 || n > max_rule_order || target < 1 || target > max_rule_order)
    fail(ErrorKind::Domain, "interpolation_matrix: order out of range");
  static std::mutex mutex;
  static std::array<std::unique_ptr<DenseMatrix>, 2 * (max_rule_order + 1) * (max_rule_order + 1)> cache;
  const std::size_t key =
      (static_cast<std::size_t>(derivative) * (max_rule_order + 1) + static_cast<std::size_t>(n)) *
          (max_rule_order + 1) +
      static_cast<std::size_t>(target);
  std::lock_guard<std::mutex> lock(mutex);
  if (!cache[key]) cache[key] = std::make_unique<DenseMatrix>(detail::build_interpolation(n, target, derivative));
  return *cache[key];
}

// ---------------------------------------------------------------------------
// Bessel functions of integer order and real argument.

namespace detail {

/// Power series for J_m(x) * m! * (2/x)^m; well conditioned for x^2 <~ 2(m+1).
inline double bessel_j_normalized_series(int m, double x) {
  const double q = -0.25 * x * x;
  double term = 1.0, sum = 1.0;
  for (int j = 1; j < 200; ++j) {
    term *= q / (double(j) * double(m + j));
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return sum;
}

inline bool use_series(int m, double x) { return x * x <= 2.0 * (m + 1); }

/// Start index for downward recurrence covering orders 0..max(M, x).
inline int miller_start(int M, double x) {
  const double top = std::max(static_cast<double>(M), x);
  int n = static_cast<int>(top + 20.0 + std::sqrt(100.0 * (top + 1.0)));
  return n + (n % 2);
}

}  // namespace detail

/// J_0..J_M and Y_0..Y_M at x > 0. J by normalized downward (Miller)
/// recurrence with a series override for orders where x is small relative
/// to the order; Y_0, Y_1 from Neumann series over the same J values, then
/// upward recurrence. Y may be null.
inline void bessel_jy_sequence(double x, int M, std::span<double> J, std::span<double> Y = {}) {
  if (!(x > 0.0)) fail(ErrorKind::Domain, "bessel_jy_sequence: x must be positive");
  const int N = detail::miller_start(std::max(M, 1), x);
  const bool want_y = !Y.empty();
  const std::size_t count = static_cast<std::size_t>(M) + 1;
  for (std::size_t i = 0; i < count; ++i) J[i] = 0.0;

  double f_next = 0.0, f = 1e-300;
  double norm = 0.0;    // f_0 + 2 sum f_{2k}
  double su = 0.0;      // sum_{k>=1} (-1)^k f_{2k} / k
  double sv = 0.0;      // sum_{odd k>=3} (-1)^{floor(k/2)} k/(k^2-1) f_k
  double f1 = 0.0;
  for (int k = N; k >= 1; --k) {
    const double f_prev = (2.0 * k / x) * f - f_next;
    f_next = f;
    f = f_prev;
    const int order = k - 1;  // f now holds the (unnormalized) J_{k-1}
    if (order <= M) J[static_cast<std::size_t>(order)] = f;
    if (order == 1) f1 = f;
    if (order > 0 && order % 2 == 0) {
      norm += 2.0 * f;
      su += ((order / 2) % 2 == 0 ? 1.0 : -1.0) * f / (order / 2);
    } else if (order > 1) {
      sv += ((order / 2) % 2 == 0 ? 1.0 : -1.0) * order / (double(order) * order - 1.0) * f;
    }
    if (std::abs(f) > 1e250) {
      const double s = 1e-250;
      f *= s;
      f_next *= s;
      f1 *= s;
      norm *= s;
      su *= s;
      sv *= s;
      for (int i = order; i <= M; ++i) J[static_cast<std::size_t>(i)] *= s;
    }
  }
  norm += f;
  const double inv = 1.0 / norm;
  for (std::size_t i = 0; i < count; ++i) J[i] *= inv;
  const double j0 = f * inv, j1 = f1 * inv;

  if (x < 1.0) {
    double xm_over_fact = 1.0;  // (x/2)^m / m!
    for (int m = 0; m <= M; ++m) {
      if (m > 0) xm_over_fact *= 0.5 * x / m;
      if (detail::use_series(m, x))
        J[static_cast<std::size_t>(m)] = xm_over_fact * detail::bessel_j_normalized_series(m, x);
    }
  }

  if (!want_y) return;
  const double lg = std::log(0.5 * x) + euler_gamma;
  const double y0 = (2.0 / pi) * lg * j0 - (4.0 / pi) * su * inv;
  const double y1 = (2.0 / pi) * ((lg - 1.0) * j1 - j0 / x - 4.0 * sv * inv);
  Y[0] = y0;
  if (M >= 1) Y[1] = y1;
  for (int m = 1; m < M; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    Y[mi + 1] = (2.0 * m / x) * Y[mi] - Y[mi - 1];
  }
}

/// J_m(x) for integer m >= 0 and x >= 0.
inline double bessel_j(int m, double x) {
  if (m < 0) fail(ErrorKind::Domain, "bessel_j: negative order");
  if (x < 0.0) fail(ErrorKind::Domain, "bessel_j: negative argument");
  if (x == 0.0) return m == 0 ? 1.0 : 0.0;
  if (detail::use_series(m, x)) {
    double pre = 1.0;
    for (int i = 1; i <= m; ++i) pre *= 0.5 * x / i;
    return pre * detail::bessel_j_normalized_series(m, x);
  }
  std::vector<double> J(static_cast<std::size_t>(m) + 1);
  bessel_jy_sequence(x, m, J);
  return J.back();
}

inline double bessel_y(int m, double x) {
  if (m < 0) fail(ErrorKind::Domain, "bessel_y: negative order");
  if (!(x > 0.0)) fail(ErrorKind::Domain, "bessel_y: argument must be positive");
  const int M = std::max(m, 1);
  std::vector<double> J(static_cast<std::size_t>(M) + 1), Y(static_cast<std::size_t>(M) + 1);
  bessel_jy_sequence(x, M, J, Y);
  return Y[static_cast<std::size_t>(m)];
}

/// H^(1)_m(x) = J_m(x) + i Y_m(x).
inline cplx hankel1(int m, double x) {
  if (m < 0) fail(ErrorKind::Domain, "hankel1: negative order");
  if (!(x > 0.0)) fail(ErrorKind::Domain, "hankel1: argument must be positive (singular at 0)");
  const int M = std::max(m, 1);
  std::vector<double> J(static_cast<std::size_t>(M) + 1), Y(static_cast<std::size_t>(M) + 1);
  bessel_jy_sequence(x, M, J, Y);
  return {J[static_cast<std::size_t>(m)], Y[static_cast<std::size_t>(m)]};
}

/// H^(1)_0(x) and H^(1)_1(x) together; large arguments use Hankel's
/// asymptotic expansion, which is exhausted well below double precision for x >= 25.
inline std::pair<cplx, cplx> hankel01(double x) {
  if (!(x > 0.0)) fail(ErrorKind::Domain, "hankel01: argument must be positive");
  if (x < 25.0) {
    std::array<double, 2> J{}, Y{};
    bessel_jy_sequence(x, 1, J, Y);
    return {cplx(J[0], Y[0]), cplx(J[1], Y[1])};
  }
  auto series = [x](double nu) {
    const double mu = 4.0 * nu * nu;
    cplx sum = 1.0;
    cplx ik = 1.0;
    double a = 1.0, last = 1.0;
    for (int k = 1; k < 200; ++k) {
      a *= (mu - (2.0 * k - 1.0) * (2.0 * k - 1.0)) / (8.0 * k * x);
      ik *= cplx(0.0, 1.0);
      if (std::abs(a) > last) break;
      sum += ik * a;
      last = std::abs(a);
      if (last < 1e-17) break;
    }
    const double phase = x - 0.5 * nu * pi - 0.25 * pi;
    return std::sqrt(2.0 / (pi * x)) * cplx(std::cos(phase), std::sin(phase)) * sum;
  };
  return {series(0.0), series(1.0)};
}

/// Jhat_m(x) = m! (2/x)^m J_m(x) for m = 0..M, the Bessel function with its
/// leading power-series term divided out; Jhat_m(0) = 1.
inline void bessel_j_normalized_sequence(double x, int M, std::span<double> out) {
  const std::size_t count = static_cast<std::size_t>(M) + 1;
  if (x == 0.0) {
    for (std::size_t i = 0; i < count; ++i) out[i] = 1.0;
    return;
  }
  int first_series = M + 1;
  for (int m = 0; m <= M; ++m) {
    if (detail::use_series(m, x)) {
      first_series = m;
      break;
    }
  }
  if (first_series > 0) {
    std::vector<double> J(static_cast<std::size_t>(first_series));
    bessel_jy_sequence(x, first_series - 1, J);
    double scale = 1.0;  // m! (2/x)^m
    for (int m = 0; m < first_series; ++m) {
      if (m > 0) scale *= 2.0 * m / x;
      out[static_cast<std::size_t>(m)] = scale * J[static_cast<std::size_t>(m)];
    }
  }
  for (int m = first_series; m <= M; ++m)
    out[static_cast<std::size_t>(m)] = detail::bessel_j_normalized_series(m, x);
}

}  // namespace aqbx

#endif
