#ifndef AQBX_DENSITY_HPP
#define AQBX_DENSITY_HPP

// Panel-wise layer densities: modal analysis, upsampling, extrapolation.

#include <aqbx/geometry.hpp>

#include <istream>
#include <sstream>

namespace aqbx {

/// Node values of sigma, panel-major with panel_order values per panel,
/// together with their per-panel Legendre coefficients.
class Density {
 public:
  Density() = default;

  Density(int n_panels, std::vector<cplx> values) : n_panels_(n_panels), values_(std::move(values)) {
    if (n_panels < 0 || values_.size() != static_cast<std::size_t>(n_panels) * panel_order)
      fail(ErrorKind::Domain, "Density: value count does not match panel count");
    const QuadratureRule& rule = gauss_legendre(panel_order);
    coeffs_.reserve(values_.size());
    for (int p = 0; p < n_panels; ++p) {
      const auto c = legendre_transform<cplx>(panel_values(p), rule);
      coeffs_.insert(coeffs_.end(), c.begin(), c.end());
    }
  }

  static Density constant(int n_panels, cplx value) {
    return Density(n_panels, std::vector<cplx>(static_cast<std::size_t>(n_panels) * panel_order, value));
  }

  /// Samples f(z) at every boundary node.
  template <class F>
  static Density sample(const Boundary& boundary, F&& f) {
    std::vector<cplx> v;
    v.reserve(static_cast<std::size_t>(boundary.num_nodes()));
    for (const Panel& p : boundary.panels)
      for (const cplx& z : p.nodes_z) v.push_back(f(z));
    return Density(boundary.num_panels(), std::move(v));
  }

  int num_panels() const { return n_panels_; }
  const std::vector<cplx>& values() const { return values_; }
  std::span<const cplx> panel_values(int p) const {
    return std::span<const cplx>(values_).subspan(static_cast<std::size_t>(p) * panel_order, panel_order);
  }
  std::span<const cplx> panel_coeffs(int p) const {
    return std::span<const cplx>(coeffs_).subspan(static_cast<std::size_t>(p) * panel_order, panel_order);
  }

 private:
  int n_panels_ = 0;
  std::vector<cplx> values_;
  std::vector<cplx> coeffs_;
};

inline std::vector<cplx> modal_coefficients(std::span<const cplx> values, const QuadratureRule& rule) {
  return legendre_transform<cplx>(values, rule);
}

inline constexpr int max_upsampled_nodes = 128;

/// Values of the n-term interpolant at the kappa*n Gauss-Legendre nodes.
inline std::vector<cplx> upsample(std::span<const cplx> values, int kappa) {
  const int n = static_cast<int>(values.size());
  if (kappa < 1) fail(ErrorKind::Domain, "upsample: kappa must be positive");
  if (kappa * n > max_upsampled_nodes) fail(ErrorKind::UpsamplingCap, "upsample: kappa*n exceeds 128");
  if (kappa == 1) return {values.begin(), values.end()};
  const DenseMatrix& L = interpolation_matrix(n, kappa * n);
  std::vector<cplx> out(static_cast<std::size_t>(kappa * n), cplx(0.0));
  for (int q = 0; q < kappa * n; ++q) {
    cplx s = 0.0;
    for (int i = 0; i < n; ++i) s += L(q, i) * values[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(q)] = s;
  }
  return out;
}

/// P_n[sigma](t0) on panel p, t0 in the standardized parameter.
inline cplx extrapolate_at(const Density& density, int panel, cplx t0) {
  if (std::abs(t0) > continuation_trust_radius)
    fail(ErrorKind::TrustRegion, "extrapolate_at: |t0| exceeds the continuation trust region");
  return legendre_series<cplx, cplx>(density.panel_coeffs(panel), t0);
}

inline double panel_max_norm(const Density& density, int panel) {
  double m = 0.0;
  for (const cplx& v : density.panel_values(panel)) m = std::max(m, std::abs(v));
  return m;
}

inline double max_norm(const Density& density) {
  double m = 0.0;
  for (const cplx& v : density.values()) m = std::max(m, std::abs(v));
  return m;
}

/// max over panels of |sigma_hat_{n-1}| / ||sigma||_inf.
inline double resolution_estimate(const Density& density) {
  const double norm = max_norm(density);
  if (norm == 0.0) return 0.0;
  double worst = 0.0;
  for (int p = 0; p < density.num_panels(); ++p)
    worst = std::max(worst, std::abs(density.panel_coeffs(p)[panel_order - 1]));
  return worst / norm;
}

inline void write_density_csv(std::ostream& os, const Density& density) {
  os << "panel,node,re,im\n";
  os.precision(17);
  for (int p = 0; p < density.num_panels(); ++p) {
    const auto v = density.panel_values(p);
    for (int i = 0; i < panel_order; ++i)
      os << p << ',' << i << ',' << v[static_cast<std::size_t>(i)].real() << ',' << v[static_cast<std::size_t>(i)].imag()
         << '\n';
  }
}

inline Density read_density_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) fail(ErrorKind::Io, "density csv: missing header");
  std::vector<std::pair<std::pair<int, int>, cplx>> rows;
  int max_panel = -1;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::string f[4];
    for (auto& s : f)
      if (!std::getline(ss, s, ',')) fail(ErrorKind::Io, "density csv: malformed row: " + line);
    try {
      const int p = std::stoi(f[0]), i = std::stoi(f[1]);
      if (p < 0 || i < 0 || i >= panel_order) fail(ErrorKind::Io, "density csv: index out of range: " + line);
      rows.push_back({{p, i}, cplx(std::stod(f[2]), std::stod(f[3]))});
      max_panel = std::max(max_panel, p);
    } catch (const std::logic_error&) {
      fail(ErrorKind::Io, "density csv: malformed row: " + line);
    }
  }
  const int np = max_panel + 1;
  std::vector<cplx> v(static_cast<std::size_t>(np) * panel_order);
  std::vector<char> seen(v.size(), 0);
  for (const auto& [idx, val] : rows) {
    const auto k = static_cast<std::size_t>(idx.first) * panel_order + static_cast<std::size_t>(idx.second);
    v[k] = val;
    seen[k] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) fail(ErrorKind::Io, "density csv: missing node values");
  return Density(np, std::move(v));
}

}  // namespace aqbx

#endif
