#include "qgnlo/runner.hpp"

#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

using namespace qgnlo;

namespace {

std::vector<std::string> lines_of(const std::string &text) {
  std::vector<std::string> out;
  std::istringstream is(text);
  for (std::string line; std::getline(is, line);)
    out.push_back(line);
  return out;
}

std::string mc_csv(RunConfig cfg, McSummary *summary = nullptr) {
  std::ostringstream os;
  write_mc_header(os, cfg);
  const auto s = run_monte_carlo(cfg, [&](const McRecord &r) { write_mc_record(os, cfg, r); });
  if (summary)
    *summary = s;
  return os.str();
}

RunConfig small_mc(std::size_t workers) {
  RunConfig cfg;
  cfg.method = Method::dl;
  cfg.grid = 401;
  cfg.workers = workers;
  cfg.mc.samples = 12;
  cfg.mc.seed = 2024;
  return cfg;
}

} // namespace

TEST_CASE("generators and graph files") {
  CHECK(resolve_graph("box").edge_count() == 1);
  CHECK(resolve_graph("box:2.5").total_length() == doctest::Approx(2.5));
  CHECK(resolve_graph("3star").edge_count() == 3);
  CHECK(resolve_graph("3star:45").edge(2).angle == doctest::Approx(std::numbers::pi / 4));
  CHECK(resolve_graph("seven-edge").edge_count() == 7);
  CHECK(resolve_graph("loop:3").is_pure_cycle());
  CHECK(resolve_graph("triangle:2").total_length() == doctest::Approx(6.0));
  CHECK_THROWS(resolve_graph("hexagon"));
  CHECK_THROWS(resolve_graph("box:abc"));
  CHECK_THROWS(resolve_graph("box:-1"));

  const auto dir = std::filesystem::temp_directory_path() / "qgnlo_test_runner";
  std::filesystem::create_directories(dir);
  const auto path = dir / "g.json";
  std::ofstream(path) << graph_to_json(shapes::seven_edge()).dump();
  CHECK(resolve_graph(path.string()).edge_count() == 7);
}

TEST_CASE("method and topology names") {
  CHECK(parse_method("sos") == Method::sos);
  CHECK(parse_method("dl") == Method::dl);
  CHECK(parse_method("both") == Method::both);
  CHECK_THROWS_AS(parse_method("fast"), RunError);
  CHECK(method_name(Method::both) == "both");
  CHECK(parse_topology(topology_name(Topology::loop)) == Topology::loop);
  CHECK(parse_topology(topology_name(Topology::wire)) == Topology::wire);
  CHECK(parse_topology(topology_name(Topology::three_star)) == Topology::three_star);
  CHECK_THROWS_AS(parse_topology("tree"), RunError);
}

TEST_CASE("worker count honors the environment") {
  CHECK(worker_count(3) >= 1);
  setenv("QGNLO_WORKERS", "2", 1);
  CHECK(worker_count(0) == 2);
  unsetenv("QGNLO_WORKERS");
  CHECK(worker_count(0) >= 1);
}

TEST_CASE("bounds check") {
  PolTensors t;
  t.units = TensorUnits::intrinsic;
  CHECK_FALSE(violates_bounds(t));
  t.beta.at({0, 1, 1}) = 1.01;
  CHECK(violates_bounds(t));
  t.beta.at({0, 1, 1}) = 0.5;
  t.gamma.at({1, 1, 1, 1}) = -0.26;
  CHECK(violates_bounds(t));
  t.gamma.at({1, 1, 1, 1}) = -0.24;
  CHECK_FALSE(violates_bounds(t));
}

TEST_CASE("a one-point sweep equals a single run") {
  RunConfig cfg;
  cfg.graph = "3star:30";
  cfg.method = Method::both;
  cfg.modes = 15;
  cfg.sweep.steps = 1;
  const auto rows = run_sweep(cfg);
  REQUIRE(rows.size() == 1);
  const auto single = run_single(cfg);
  CHECK(rows[0].result.dl->raw.beta[3] == single.dl->raw.beta[3]);
  CHECK(rows[0].result.sos->raw.gamma[5] == single.sos->raw.gamma[5]);
  CHECK(single.deviation->beta_max < 1e-3);
}

TEST_CASE("rotating a single edge gives gamma_xxxx proportional to cos^4") {
  RunConfig cfg;
  cfg.graph = "box";
  cfg.method = Method::dl;
  cfg.sweep = {0, 0.0, 90.0, 7};
  const auto rows = run_sweep(cfg);
  REQUIRE(rows.size() == 7);
  const double g0 = rows[0].result.dl->intrinsic.gamma.at({0, 0, 0, 0});
  for (const auto &row : rows) {
    const double c = std::cos(row.angle_deg * std::numbers::pi / 180.0);
    CHECK(std::abs(row.result.dl->intrinsic.gamma.at({0, 0, 0, 0}) - g0 * std::pow(c, 4)) < 1e-9);
    CHECK(row.result.dl->intrinsic.beta.max_abs() < 1e-8);
  }
  std::ostringstream os;
  write_sweep_csv(os, cfg, rows);
  const auto lines = lines_of(os.str());
  CHECK(lines.size() == 9);
  CHECK(lines[0].rfind("# {", 0) == 0);
  CHECK(lines[1].rfind("angle_deg,e0,e10,dl_beta_xxx", 0) == 0);
}

TEST_CASE("Monte Carlo output depends only on the seed") {
  McSummary s1;
  const auto one = mc_csv(small_mc(1), &s1);
  const auto three = mc_csv(small_mc(3));
  CHECK(one == three);
  CHECK(mc_csv(small_mc(2)) == one);
  CHECK(s1.samples == 12);
  CHECK(s1.failures == 0);
  CHECK(s1.violations == 0);
  auto other = small_mc(2);
  other.mc.seed = 2025;
  CHECK(mc_csv(other) != one);
  CHECK(lines_of(one).size() == 14);
  CHECK(one.find("\"seed\":2024") != std::string::npos);
  CHECK(one.find("\"length_distribution\":\"uniform\"") != std::string::npos);

  QuantumGraph g0 = shapes::box(1.0), g1 = shapes::box(1.0);
  const auto a = draw_sample(small_mc(1).mc, 5, &g0);
  const auto b = draw_sample(small_mc(1).mc, 5, &g1);
  CHECK(a.lengths == b.lengths);
  CHECK(a.angles_deg == b.angles_deg);
  for (double l : a.lengths) {
    CHECK(l >= 0.1);
    CHECK(l <= 1.0);
  }
}

TEST_CASE("loop and wire samples") {
  for (Topology t : {Topology::loop, Topology::wire}) {
    auto cfg = small_mc(2);
    cfg.mc.topology = t;
    cfg.mc.samples = 4;
    McSummary s;
    const auto csv = mc_csv(cfg, &s);
    CHECK(s.failures == 0);
    CHECK(lines_of(csv).size() == 6);
    QuantumGraph g = shapes::box(1.0);
    draw_sample(cfg.mc, 1, &g);
    CHECK(g.is_pure_cycle() == (t == Topology::loop));
  }
}

TEST_CASE("failed samples are recorded, not dropped") {
  auto cfg = small_mc(2);
  cfg.grid = 400; // even: every DL evaluation throws
  cfg.mc.samples = 5;
  McSummary s;
  std::vector<std::size_t> seen;
  run_monte_carlo(cfg, [&](const McRecord &r) {
    seen.push_back(r.index);
    CHECK_FALSE(r.result.error.empty());
    CHECK(r.result.flagged());
  });
  CHECK(seen == std::vector<std::size_t>{0, 1, 2, 3, 4});
  const auto csv = mc_csv(cfg, &s);
  CHECK(s.failures == 5);
  CHECK(lines_of(csv).size() == 7);
  CHECK(csv.find("error: ") != std::string::npos);
}

TEST_CASE("benchmark rows") {
  RunConfig cfg;
  cfg.graph = "3star:30";
  cfg.bench_modes = {8, 16};
  cfg.bench_repeats = 1;
  const auto rows = run_benchmark(cfg);
  REQUIRE(rows.size() == 2);
  for (const auto &r : rows) {
    CHECK(r.sos_seconds > 0.0);
    CHECK(r.dl_seconds > 0.0);
    CHECK(r.speedup == doctest::Approx(r.sos_seconds / r.dl_seconds));
  }
  std::ostringstream os;
  write_bench_csv(os, cfg, rows);
  CHECK(lines_of(os.str()).size() == 4);
  CHECK(median_seconds([] {}, 3) >= 0.0);
}

TEST_CASE("result json") {
  const auto r = evaluate(shapes::reference_three_star(0.5), Method::both, 12, 1001);
  const auto j = result_to_json(r);
  for (const char *key : {"graph", "e0", "e1", "e10", "sos", "dl", "deviation", "flags", "beta_vanishes"})
    CHECK(j.contains(key));
  CHECK(j["sos"].contains("trk_residual"));
  CHECK(j["dl"]["beta_intrinsic"].contains("xxy"));
  CHECK(j["dl"]["gamma_intrinsic"].size() == 16);
  CHECK(j["beta_vanishes"] == false);
  CHECK(j["graph"]["edges"] == 3);

  const auto box = result_to_json(evaluate(shapes::box(1.0), Method::dl, 12, 1001));
  CHECK(box["beta_vanishes"] == true);
  CHECK_FALSE(box.contains("sos"));

  const auto cols = tensor_columns("dl_");
  CHECK(cols.size() == 24);
  CHECK(cols.front() == "dl_beta_xxx");
  CHECK(cols.back() == "dl_gamma_yyyy");
}

TEST_CASE("field dump") {
  const auto dir = std::filesystem::temp_directory_path() / "qgnlo_test_fields";
  std::filesystem::remove_all(dir);
  dump_fields(shapes::reference_three_star(0.5), 101, dir);
  std::ifstream in(dir / "fields.csv");
  std::stringstream ss;
  ss << in.rdbuf();
  const auto lines = lines_of(ss.str());
  REQUIRE(lines.size() == 1 + 3 * 101);
  CHECK(lines[0] == "edge,node,s,x,y,psi0,F_x,F_y,G_xx,G_xy,G_yx,G_yy");
}
