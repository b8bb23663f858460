#include <aqbx/experiments.hpp>

#include <catch_amalgamated.hpp>

#include <random>

using namespace aqbx;

namespace {

const std::vector<std::string> commands = {"estimate-map", "field", "table-tol", "table-rh", "close-source", "solve"};

std::string csv(const Table& t) {
  std::ostringstream os;
  t.write(os);
  return os.str();
}

ErrorKind kind_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("no error thrown");
  return ErrorKind::Domain;
}

}  // namespace

TEST_CASE("Command defaults", "[experiments]") {
  for (const auto& cmd : commands) {
    CHECK_NOTHROW(validate_config(default_config(cmd)));
    CHECK_NOTHROW(validate_config(default_config(cmd, true)));
  }
  CHECK(default_config("table-tol").n_panels == 100);
  CHECK(default_config("table-tol", true).n_panels == 200);
  CHECK(*default_config("solve").c == 2.0);
  CHECK(default_config("estimate-map").kernel == "laplace");
  CHECK(default_config("estimate-map").n_panels == 27);
  CHECK(default_config("field").tolerances == std::vector<double>{1e-4, 1e-8, 1e-12});
  CHECK(default_config("field", true).grid.nx == 500);
  const auto cs = default_config("close-source");
  REQUIRE(cs.distances.size() == 20u);
  CHECK(cs.distances.front() == 0.125);
  CHECK(cs.distances.back() == 8.0);
  CHECK(kind_of([] { default_config("plot"); }) == ErrorKind::Config);
}

TEST_CASE("Config parsing", "[experiments]") {
  const auto c = parse_config("# comment\n\nkernel = laplace\nn_panels=40\nc=\ntolerances=1e-3, 1e-5\nseed=9\n");
  CHECK(c.kernel == "laplace");
  CHECK(c.n_panels == 40);
  CHECK_FALSE(c.c.has_value());
  CHECK(c.tolerances == std::vector<double>{1e-3, 1e-5});
  CHECK(c.seed == 9u);

  const auto on_base = parse_config("n_panels=12\n", default_config("estimate-map"));
  CHECK(on_base.kernel == "laplace");
  CHECK(on_base.n_panels == 12);

  try {
    parse_config("panels=40\n");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    CHECK(std::string(e.what()) == "unknown config key: panels");
  }
  CHECK(kind_of([] { parse_config("n_panels\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("n_panels=4x\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("amplitude=big\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("tolerances=1e-4,,1e-6\n"); }) == ErrorKind::Config);
  CHECK(kind_of([] { parse_config("seed=-1\n"); }) == ErrorKind::Config);
}

TEST_CASE("Config round trip", "[experiments][property]") {
  for (const auto& cmd : commands)
    for (bool paper : {false, true}) {
      const auto c = default_config(cmd, paper);
      CHECK(parse_config(serialize_config(c)) == c);
    }
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    ExperimentConfig c;
    c.amplitude = u(rng);
    c.n_panels = 4 + static_cast<int>(300 * u(rng));
    if (trial % 2) c.k = 100.0 * u(rng), c.c.reset();
    c.tolerances = {u(rng) * 1e-3, std::pow(10.0, -14.0 * u(rng))};
    c.r_over_h = u(rng);
    c.distances = {u(rng), 1.0 / 3.0};
    c.grid = {-u(rng), u(rng), -2.0 * u(rng), 1.0 / 7.0, trial, 2 * trial};
    c.seed = static_cast<std::uint64_t>(1e9 * u(rng));
    c.surrogate = trial % 3 ? "max-norm" : "extrapolate";
    const auto back = parse_config(serialize_config(c));
    CHECK(back == c);
    CHECK(serialize_config(back) == serialize_config(c));
  }
}

TEST_CASE("Config validation", "[experiments]") {
  auto invalid = [](const std::string& text) {
    return kind_of([&] { validate_config(parse_config(text)); }) == ErrorKind::Config;
  };
  CHECK(invalid("k=20\n"));  // both k and c
  CHECK(invalid("c=\n"));    // neither
  CHECK_NOTHROW(validate_config(parse_config("kernel=laplace\nc=\n")));
  CHECK(invalid("tolerances=1\n"));
  CHECK(invalid("tolerances=1e-16\n"));
  CHECK(invalid("gmres_tolerances=2\n"));
  CHECK(invalid("r_over_h=0\n"));
  CHECK(invalid("r_over_h_list=0.5,1.5\n"));
  CHECK(invalid("grid_xmax=inf\n"));
  CHECK(invalid("grid_xmin=nan\n"));
  CHECK(invalid("grid_xmin=2\ngrid_xmax=1\n"));
  CHECK(invalid("grid_nx=-1\n"));
  CHECK(invalid("kernel=stokes\n"));
  CHECK(invalid("curve=square\n"));
  CHECK(invalid("n_panels=3\n"));
  CHECK(invalid("near_count=0\n"));
  CHECK(invalid("surrogate=mean\n"));
  CHECK(invalid("sweep_kappa_max=9\n"));
  CHECK(invalid("distances=0.5,-1\n"));
}

TEST_CASE("Grid points", "[experiments]") {
  GridSpec g{0.0, 1.0, -1.0, 1.0, 3, 2};
  const auto pts = g.points();
  REQUIRE(pts.size() == 6u);
  CHECK(pts[0] == cplx(0.0, -1.0));
  CHECK(pts[1] == cplx(0.5, -1.0));
  CHECK(pts[5] == cplx(1.0, 1.0));
  CHECK(GridSpec{0.0, 1.0, 0.0, 1.0, 1, 1}.points() == std::vector<cplx>{cplx(0.5, 0.5)});
  CHECK(GridSpec{0.0, 1.0, 0.0, 1.0, 0, 5}.points().empty());
}

TEST_CASE("CSV tables", "[experiments]") {
  Table t;
  t.header = {"a", "b", "c"};
  t.add(0.1, 3, std::string("nan"));
  t.add(1.0 / 3.0, -2, std::string("x"));
  CHECK(csv(t) == "a,b,c\n0.10000000000000001,3,nan\n0.33333333333333331,-2,x\n");
  CHECK(t.value(1, "a") == 1.0 / 3.0);
  CHECK(t.value(0, "b") == 3.0);
  CHECK_THROWS_AS(t.column("d"), Error);
}

TEST_CASE("Cheapest fixed parameters", "[experiments]") {
  FixedSweep s;
  // err[kappa-1][p]
  s.err = {{1.0, 1e-2, 1e-4, 1e-6, 1e-6}, {1.0, 1e-3, 1e-5, 1e-7, 1e-9}, {1.0, 1e-3, 1e-6, 1e-8, 1e-10}};
  CHECK(*s.optimal(1e-2) == std::pair{1, 1});
  CHECK(*s.optimal(1e-4) == std::pair{2, 1});
  CHECK(*s.optimal(1e-6) == std::pair{3, 1});
  CHECK(*s.optimal(1e-7) == std::pair{3, 2});
  CHECK(*s.optimal(1e-8) == std::pair{4, 2});
  CHECK(*s.optimal(1e-10) == std::pair{4, 3});
  CHECK_FALSE(s.optimal(1e-11).has_value());
}

TEST_CASE("Empty grids give header-only output", "[experiments]") {
  auto c = default_config("estimate-map");
  c.grid.nx = 0;
  CHECK(csv(run_command("estimate-map", c)) == "x,y,measured,estimated\n");
  auto f = default_config("field");
  f.n_panels = 30;
  f.grid.ny = 0;
  CHECK(csv(run_command("field", f)) == "tolerance,x,y,re,im,error,activated\n");
}

TEST_CASE("Estimate map bounds the measured error", "[experiments]") {
  auto c = default_config("estimate-map");
  c.grid = {-1.4, 1.4, -1.4, 1.4, 24, 24};
  const Table t = run_command("estimate-map", c);
  REQUIRE(t.rows.size() > 100u);
  int considered = 0, bounded = 0;
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    const double m = t.value(i, "measured"), e = t.value(i, "estimated");
    if (m <= 1e-14) continue;
    ++considered;
    bounded += m <= 10.0 * e;
  }
  REQUIRE(considered > 20);
  CHECK(bounded >= 0.99 * considered);
  // byte-stable output
  CHECK(csv(run_command("estimate-map", c)) == csv(t));
}

TEST_CASE("Far-field grid equals direct evaluation", "[experiments]") {
  auto c = default_config("field");
  c.n_panels = 30;
  c.tolerances = {1e-10};
  c.grid = {2.0, 3.0, 2.0, 3.0, 4, 4};
  const Table t = run_command("field", c);
  REQUIRE(t.rows.size() == 16u);
  const auto bvp = problem_from_config(c);
  const Density sigma = reference_density(bvp);
  for (std::size_t i = 0; i < t.rows.size(); ++i) {
    CHECK(t.value(i, "activated") == 0.0);
    const cplx z(t.value(i, "x"), t.value(i, "y"));
    const cplx d = direct_eval_at(bvp.boundary, sigma, bvp.kernel, z);
    CHECK(t.value(i, "re") == d.real());
    CHECK(t.value(i, "im") == d.imag());
  }
}

TEST_CASE("Small work table", "[experiments]") {
  auto c = default_config("table-tol");
  c.n_panels = 30;
  c.tolerances = {1e-6, 1e-9};
  c.sweep_p_max = 24;
  c.sweep_kappa_max = 4;
  const Table t = run_command("table-tol", c);
  REQUIRE(t.rows.size() == 2u);
  CHECK(t.header == std::vector<std::string>{"tolerance", "error", "avg_p", "avg_kappa", "avg_W", "opt_p", "opt_kappa",
                                             "opt_W", "speedup", "capped"});
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(t.value(i, "avg_W") >= t.value(i, "avg_p"));
    CHECK(std::abs(t.value(i, "avg_kappa") - t.value(i, "avg_W") / t.value(i, "avg_p")) < 1e-12);
    if (t.rows[i][t.column("speedup")] != "nan") {
      CHECK(t.value(i, "opt_W") == t.value(i, "opt_p") * t.value(i, "opt_kappa"));
      CHECK(std::abs(t.value(i, "speedup") - t.value(i, "opt_W") / t.value(i, "avg_W")) < 1e-12);
    }
  }
  CHECK(t.value(1, "avg_p") > t.value(0, "avg_p"));
}

TEST_CASE("Command preconditions", "[experiments]") {
  auto c = default_config("close-source");
  c.kernel = "laplace";
  c.c.reset();
  CHECK(kind_of([&] { run_command("close-source", c); }) == ErrorKind::Config);
  auto r = default_config("table-rh");
  r.tolerances.clear();
  CHECK(kind_of([&] { run_command("table-rh", r); }) == ErrorKind::Config);
  CHECK(kind_of([&] { run_command("plot", default_config("solve")); }) == ErrorKind::Config);
  auto bad = default_config("solve");
  bad.k = 3.0;
  CHECK(kind_of([&] { run_command("solve", bad); }) == ErrorKind::Config);
}
