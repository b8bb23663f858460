#include <aqbx/aqbx.hpp>

#include <catch_amalgamated.hpp>

#include <random>
#include <sstream>

using namespace aqbx;

namespace {

// Gauss identity: with unit density the double layer is 1 inside and 0
// outside; direct quadrature is only used to decide the side
double laplace_unit_truth(const Boundary& b, cplx z) {
  const cplx s = direct_eval_at(b, Density::constant(b.num_panels(), 1.0), KernelSpec::laplace(), z);
  return std::abs(s.real()) > 0.5 ? 1.0 : 0.0;
}

Density smooth_density(const Boundary& b) {
  return Density::sample(b, [](cplx z) { return std::exp(cplx(0.0, 1.0) * z) + 0.5 * z * z; });
}

}  // namespace

TEST_CASE("Centers on a circle", "[aqbx]") {
  const Boundary b = build_boundary(circle(), 16);
  const double h = b.h();
  const auto cs = place_centers(b, 0.25, Side::Interior);
  REQUIRE(cs.size() == 256u);
  for (const auto& c : cs) {
    CHECK(std::abs(std::abs(c.z0) - (1.0 - h / 4.0)) < 1e-12);
    CHECK(std::abs(c.r - h / 4.0) < 1e-6);
    CHECK(c.near.size() == 5u);
    CHECK(c.side == Side::Interior);
  }
  const auto ext = place_centers(b, 0.25, Side::Exterior);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const cplx node = b.node(static_cast<int>(i));
    CHECK(std::abs((ext[i].z0 - node) + (cs[i].z0 - node)) < 1e-14);
    CHECK(std::abs(ext[i].z0) > 1.0);
  }
  CHECK_THROWS_AS(place_centers(b, 0.0, Side::Interior), Error);
  CHECK_THROWS_AS(place_centers(b, 1.5, Side::Interior), Error);
}

TEST_CASE("Centers on the 200-panel starfish", "[aqbx]") {
  const Boundary b = build_boundary(starfish(), 200);
  const auto cs = place_centers(b, 0.25, Side::Exterior);
  REQUIRE(cs.size() == 3200u);
  const double q = b.h() / 4.0;
  for (const auto& c : cs) {
    CHECK(c.r >= 0.9 * q);
    CHECK(c.r <= 1.0 * q + 1e-15);
    // the closest node is the base node
    CHECK(nearest_node(b, c.z0).first == c.base_global());
  }
}

TEST_CASE("Covering the base node", "[aqbx]") {
  const Boundary b = build_boundary(starfish(), 60);
  const auto cs = covering_base_nodes(b, place_centers(b, 1.0, Side::Exterior));
  for (const auto& c : cs) CHECK(std::abs(b.node(c.base_global()) - c.z0) <= c.r);
}

TEST_CASE("Zeroth coefficient holds the potential at the center", "[aqbx]") {
  const Boundary b = build_boundary(starfish(0.3, 5, false), 50);
  const PanelCache cache(b);
  const Density one = Density::constant(b.num_panels(), 1.0);
  const KernelSpec L = KernelSpec::laplace();
  const auto cs = place_centers(b, 0.25, Side::Interior);
  for (double eps : {1e-6, 1e-10}) {
    for (std::size_t i = 0; i < cs.size(); i += 37) {
      const Expansion e = compute_expansion(b, cache, one, L, cs[i], eps);
      const cplx far = direct_eval_far(b, one, L, cs[i].z0, cs[i].near);
      CHECK(std::abs((e.coeffs[0].v[0] + far).real() - 1.0) <= eps);
    }
  }

  const Boundary hb = build_boundary(starfish(), 50);
  const PanelCache hcache(hb);
  const Density sigma = smooth_density(hb);
  const KernelSpec H = KernelSpec::helmholtz(10.0);
  const auto hcs = place_centers(hb, 0.25, Side::Exterior);
  for (std::size_t i = 3; i < hcs.size(); i += 41) {
    const Expansion e = compute_expansion(hb, hcache, sigma, H, hcs[i], 1e-10);
    const Expansion ref = compute_expansion_fixed(hcache, sigma, H, hcs[i], 0, 8);
    CHECK(std::abs(e.coeffs[0].v[0] - ref.coeffs[0].v[0]) <= 1e-10);
  }
}

TEST_CASE("Accepted coefficients meet the tolerance", "[aqbx][property]") {
  const Boundary b = build_boundary(starfish(), 50);
  const PanelCache cache(b);
  const Density sigma = smooth_density(b);
  for (const KernelSpec& spec : {KernelSpec::laplace(), KernelSpec::helmholtz(10.0)}) {
    const auto cs = place_centers(b, 0.25, Side::Exterior);
    for (double eps : {1e-4, 1e-8, 1e-12}) {
      for (std::size_t i = 5; i < cs.size(); i += 53) {
        const Expansion e = compute_expansion(b, cache, sigma, spec, cs[i], eps);
        REQUIRE(e.terminated_by == Termination::Tolerance);
        const int p = e.order();
        CHECK(p >= 1);
        CHECK(std::max(e.coeffs[p].norm(), e.coeffs[p - 1].norm()) < eps);
        CHECK(e.work() >= p);
        for (int m = 1; m <= p; ++m) CHECK(e.kappa[m] >= e.kappa[m - 1]);
        const Expansion ref = compute_expansion_fixed(cache, sigma, spec, cs[i], p, 8);
        for (int m = 0; m <= p; ++m) {
          CHECK(e.coeff_estimate[m] <= eps);
          if (2 * m <= e.kappa[m] * panel_order) {
            const double d = std::hypot(std::abs(e.coeffs[m].v[0] - ref.coeffs[m].v[0]),
                                        std::abs(e.coeffs[m].v[1] - ref.coeffs[m].v[1]));
            CHECK(d <= 10.0 * eps);
          }
        }
      }
    }
  }
}

TEST_CASE("Caps", "[aqbx]") {
  const Boundary b = build_boundary(starfish(), 30);
  const PanelCache cache(b);
  const Density one = Density::constant(b.num_panels(), 1.0);
  const auto cs = place_centers(b, 0.25, Side::Exterior);
  AqbxOptions opt;
  opt.p_max = 3;
  CHECK_THROWS_AS(compute_expansion(b, cache, one, KernelSpec::laplace(), cs[7], 1e-12, opt), Error);
  opt.flag_caps = true;
  const Expansion e = compute_expansion(b, cache, one, KernelSpec::laplace(), cs[7], 1e-12, opt);
  CHECK(e.terminated_by == Termination::OrderCap);
  CHECK(e.order() == 3);

  AqbxOptions up;
  up.kappa_n_max = 16;
  try {
    compute_expansion(b, cache, one, KernelSpec::laplace(), cs[7], 1e-14, up);
    FAIL("expected a tolerance-unreachable error");
  } catch (const Error& err) {
    CHECK(err.kind() == ErrorKind::ToleranceUnreachable);
  }
  CHECK_THROWS_AS(compute_expansion(b, cache, one, KernelSpec::laplace(), cs[7], 0.0), Error);
}

TEST_CASE("Evaluation of an expansion", "[aqbx]") {
  const Boundary b = build_boundary(starfish(), 40);
  const PanelCache cache(b);
  const Density sigma = smooth_density(b);
  std::mt19937 rng(29);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (const KernelSpec& spec : {KernelSpec::laplace(), KernelSpec::helmholtz(8.0)}) {
    const auto cs = covering_base_nodes(b, place_centers(b, 0.25, Side::Exterior));
    for (std::size_t i = 0; i < cs.size(); i += 29) {
      const Expansion e = compute_expansion(b, cache, sigma, spec, cs[i], 1e-9);
      const auto at_center = evaluate_expansion(e, cs[i].z0, 1e-9);
      CHECK(at_center.value == e.coeffs[0].v[0]);
      for (int s = 0; s < 20; ++s) {
        const cplx z = cs[i].z0 + cs[i].r * std::sqrt(u(rng)) * std::polar(1.0, 2.0 * pi * u(rng));
        CHECK(evaluate_expansion(e, z, 1e-9).terms <= e.order());
      }
      CHECK(evaluate_expansion(e, b.node(cs[i].base_global()), 1e-9).terms <= e.order());
      CHECK_THROWS_AS(evaluate_expansion(e, cs[i].z0 + 1.01 * cs[i].r, 1e-9), Error);
      const auto sums = expansion_partial_sums(e, cs[i].z0 + 0.5 * cs[i].r);
      CHECK(sums.size() == static_cast<std::size_t>(e.order()) + 1);
    }
  }
}

TEST_CASE("On-surface Gauss identity through local QBX", "[aqbx]") {
  const Boundary b = build_boundary(starfish(0.3, 5, false), 60);
  const PanelCache cache(b);
  const Density one = Density::constant(b.num_panels(), 1.0);
  const auto cs = covering_base_nodes(b, place_centers(b, 0.25, Side::Interior));
  for (double eps : {1e-6, 1e-10}) {
    double worst = 0.0;
    for (std::size_t i = 0; i < cs.size(); i += 7) {
      const Expansion e = compute_expansion(b, cache, one, KernelSpec::laplace(), cs[i], eps);
      const cplx z = b.node(cs[i].base_global());
      // interior limit of the double layer of unit density
      worst = std::max(worst, std::abs(local_qbx_value(b, one, e, z, eps).real() - 1.0));
    }
    CHECK(worst <= 10.0 * eps);
  }
}

TEST_CASE("Direct evaluation", "[aqbx]") {
  const Boundary c = build_boundary(circle(), 10);
  const Density one = Density::constant(10, 1.0);
  CHECK(std::abs(direct_eval_at(c, one, KernelSpec::laplace(), 0.0).real() - 1.0) < 1e-14);
  CHECK_THROWS_AS(direct_eval_at(c, one, KernelSpec::laplace(), c.node(5)), Error);
  const std::vector<cplx> pts = {0.1, cplx(0.0, 2.0)};
  const auto v = direct_eval(c, one, KernelSpec::laplace(), pts);
  CHECK(std::abs(v[0].real() - 1.0) < 1e-14);
  CHECK(std::abs(v[1].real()) < 1e-14);

  // near-boundary direct error against its estimate
  const Boundary b = build_boundary(starfish(0.3, 5, false), 40);
  const Density ones = Density::constant(40, 1.0);
  int checked = 0;
  for (int p = 0; p < 40; p += 3) {
    const Panel& pan = b.panel(p);
    const cplx z = pan.nodes_z[6] + 0.1 * b.h() * pan.normals[6];  // inward, at h/10
    const double err = std::abs(direct_eval_at(b, ones, KernelSpec::laplace(), z).real() - 1.0);
    const double est = direct_error_estimate(b, ones, KernelSpec::laplace(), z);
    CHECK(err <= 10.0 * est);
    CHECK(est <= 10.0 * err);
    ++checked;
  }
  CHECK(checked == 14);
}

TEST_CASE("Far-field targets are never activated", "[aqbx]") {
  const Boundary b = build_boundary(starfish(), 40);
  const Density sigma = smooth_density(b);
  const KernelSpec H = KernelSpec::helmholtz(5.0);
  std::vector<cplx> pts;
  for (int i = 0; i < 24; ++i) pts.push_back(std::polar(1.3 + 2.0 * b.h() + 0.1 * (i % 3), 2.0 * pi * i / 24));
  const auto field = evaluate_field(b, sigma, H, pts, 1e-10);
  const auto direct = direct_eval(b, sigma, H, pts);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    CHECK_FALSE(field[i].activated);
    CHECK(field[i].value == direct[i]);
  }
}

TEST_CASE("Correction form agrees with the far/near split", "[aqbx]") {
  const Boundary b = build_boundary(starfish(), 40);
  const PanelCache cache(b);
  const Density sigma = smooth_density(b);
  const KernelSpec H = KernelSpec::helmholtz(5.0);
  const auto cs = place_centers(b, 0.25, Side::Exterior);
  for (std::size_t i = 0; i < cs.size(); i += 61) {
    const Expansion e = compute_expansion(b, cache, sigma, H, cs[i], 1e-10);
    const cplx z = cs[i].z0 + 0.5 * cs[i].r;
    const cplx qbx = evaluate_expansion(e, z, 1e-10).value;
    const cplx corrected = direct_eval_at(b, sigma, H, z) - direct_eval_at(b, sigma, H, z, cs[i].near) + qbx;
    CHECK(std::abs(corrected - (direct_eval_far(b, sigma, H, z, cs[i].near) + qbx)) < 1e-13);
  }
}

TEST_CASE("Field evaluation near the boundary meets the tolerance", "[aqbx]") {
  const Boundary b = build_boundary(starfish(0.3, 5, false), 40);
  const Density one = Density::constant(40, 1.0);
  std::vector<cplx> pts;
  for (int i = 0; i < 40; ++i) {
    const Panel& pan = b.panel(i);
    for (double d : {-0.6, -0.2, -0.05, 0.03, 0.15, 0.5}) pts.push_back(pan.nodes_z[(3 * i) % 16] + d * b.h() * pan.normals[(3 * i) % 16]);
  }
  std::vector<double> truth;
  for (cplx z : pts) truth.push_back(laplace_unit_truth(b, z));
  int prev_active = -1;
  for (double eps : {1e-4, 1e-8, 1e-12}) {
    const auto f = evaluate_field(b, one, KernelSpec::laplace(), pts, eps);
    double worst = 0.0;
    int active = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      worst = std::max(worst, std::abs(f[i].value.real() - truth[i]));
      active += f[i].activated;
    }
    CHECK(worst <= 10.0 * eps);
    CHECK(active > prev_active);
    prev_active = active;
  }
}

TEST_CASE("Work accounting and diagnostics", "[aqbx]") {
  Expansion e;
  e.kappa = {1, 1, 2, 2, 3};
  e.coeffs.resize(5);
  e.center.base_panel = 2;
  e.center.base_node = 3;
  CHECK(e.work() == 8.0);
  CHECK(e.order() == 4);
  CHECK(work_qbx(4, 3) == 12.0);
  WorkCounter w;
  w.add(e);
  w.add(e);
  CHECK(w.avg_p() == 4.0);
  CHECK(w.avg_w() == 8.0);
  CHECK(w.avg_kappa() == 2.0);
  std::ostringstream os;
  const std::vector<Expansion> es = {e};
  write_diagnostics_csv(os, es);
  CHECK(os.str() == "center,p,kappa_history,W,terminated_by\n35,4,1;1;2;2;3,8,tolerance\n");
}
