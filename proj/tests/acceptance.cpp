// Acceptance suite: one PASS/FAIL line per criterion. Criterion 10 is timing
// dependent and reported without affecting the exit status.

#include "qgnlo/dl.hpp"
#include "qgnlo/runner.hpp"
#include "qgnlo/sos.hpp"
#include "qgnlo/spectrum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

using namespace qgnlo;

namespace {

constexpr double pi = std::numbers::pi;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

template <std::size_t R>
double max_abs_diff(const CartesianTensor<R> &a, const CartesianTensor<R> &b) {
  double d = 0.0;
  for (std::size_t f = 0; f < CartesianTensor<R>::size; ++f)
    d = std::max(d, std::abs(a[f] - b[f]));
  return d;
}

/// Largest |dl - sos| / max(rel |sos|, abs) over all components; <= 1 passes.
template <std::size_t R>
double tolerance_ratio(const CartesianTensor<R> &dl, const CartesianTensor<R> &sos,
                       double rel, double abs) {
  double worst = 0.0;
  for (std::size_t f = 0; f < CartesianTensor<R>::size; ++f)
    worst = std::max(worst, std::abs(dl[f] - sos[f]) / std::max(rel * std::abs(sos[f]), abs));
  return worst;
}

std::vector<SweepRow> reference_sweep() {
  RunConfig cfg;
  cfg.graph = "3star";
  cfg.method = Method::both;
  cfg.modes = 30;
  cfg.sweep = {2, 0.0, 360.0, 73};
  return run_sweep(cfg);
}

Outcome sweep_beta(const std::vector<SweepRow> &rows) {
  double worst = 0.0;
  for (const auto &r : rows)
    worst = std::max(worst, tolerance_ratio(r.result.dl->intrinsic.beta,
                                            r.result.sos->intrinsic.beta, 0.005, 1e-4));
  return {worst <= 1.0 && rows.size() == 73,
          std::to_string(rows.size()) + " angles, worst error/tolerance " + num(worst)};
}

Outcome sweep_gamma(const std::vector<SweepRow> &rows) {
  double worst = 0.0;
  for (const auto &r : rows)
    worst = std::max(worst, tolerance_ratio(r.result.dl->intrinsic.gamma,
                                            r.result.sos->intrinsic.gamma, 0.01, 5e-4));
  return {worst <= 1.0 && rows.size() == 73,
          std::to_string(rows.size()) + " angles, worst error/tolerance " + num(worst)};
}

Outcome seven_edge() {
  const auto g = shapes::seven_edge();
  const auto dl = compute_dl(g);
  const auto sos = compute_sos(g, 20);
  const double dev = max_abs_diff(dl.intrinsic.beta, sos.intrinsic.beta) /
                     sos.intrinsic.beta.max_abs();
  return {dev <= 0.01, "max beta deviation / max component " + num(dev)};
}

Outcome degeneracy() {
  bool ok = true;
  std::string detail;
  const auto s = find_spectrum(shapes::reference_three_star(deg_to_rad(30.0)), 12);
  for (std::size_t n : {4u, 10u}) {
    const bool pair = s.modes[n].level == s.modes[n + 1].level &&
                      s.levels[s.modes[n].level].multiplicity == 2;
    ok = ok && pair;
  }
  std::size_t extra = 0;
  for (const auto &lv : s.levels)
    if (lv.first_mode < 12 && lv.multiplicity > 1 && lv.first_mode != 4 && lv.first_mode != 10)
      ++extra;
  ok = ok && extra == 0;
  detail += "3-star pairs at (4,5) and (10,11): " + std::string(ok ? "yes" : "no");

  double worst_k = 0.0;
  for (const auto &g : {shapes::two_edge_loop(3.7),
                        shapes::polygon_loop({{0, 0}, {1.2, 0.1}, {0.3, 0.9}})}) {
    const double perim = g.total_length();
    const auto ls = find_spectrum(g, 16);
    for (std::size_t n = 1; n <= 8; ++n) {
      const auto &lv = ls.levels.at(n);
      ok = ok && lv.multiplicity == 2;
      worst_k = std::max(worst_k, std::abs(lv.k - 2 * pi * n / perim) / (2 * pi * n / perim));
    }
  }
  ok = ok && worst_k <= 1e-9;
  detail += "; loop k_n relative error " + num(worst_k);
  return {ok, detail};
}

double reconstruction_error(const QuantumGraph &g) {
  const auto s = find_spectrum(g, 200);
  const GroundGrid ctx(g, s.modes[0], 2001);
  const auto e = s.energies();
  double worst = 0.0;
  for (Axis a : {Axis::x, Axis::y}) {
    const auto mom = transition_moments(s, g, a);
    const DLField f = build_F(ctx, a);
    double err = 0.0, scale = 0.0;
    for (std::size_t p = 0; p < g.edge_count(); ++p)
      for (std::size_t i = 0; i < ctx.points(); i += 10) {
        const double x = static_cast<double>(i) * ctx.step(p);
        double sum = 0.0;
        for (std::size_t n = 1; n <= 200 && n < s.size(); ++n)
          sum += -mom.bar(n, 0) / (e[n] - e[0]) * s.modes[n].value(p, x);
        const double fpsi = f.values[p][i] * ctx.psi()[p][i];
        err = std::max(err, std::abs(fpsi - sum));
        scale = std::max(scale, std::abs(fpsi));
      }
    if (scale > 0.0)
      worst = std::max(worst, err / scale);
  }
  return worst;
}

Outcome reconstruction() {
  const double box = reconstruction_error(shapes::box(1.0));
  const double wire = reconstruction_error(shapes::wire({0.6, 0.9, 0.4}, {0.0, 0.8, -0.5}));
  return {box <= 1e-4 && wire <= 1e-4, "box " + num(box) + ", wire " + num(wire)};
}

Outcome vertex_residuals() {
  const auto g = shapes::seven_edge();
  const GroundGrid ctx(g, ground_state(g), 2001);
  std::vector<DLField> fields;
  for (Axis j : {Axis::x, Axis::y})
    fields.push_back(build_F(ctx, j));
  for (std::size_t j = 0; j < 2; ++j)
    for (Axis i : {Axis::x, Axis::y})
      fields.push_back(build_G(ctx, fields[j], i));
  double cont = 0.0, flux = 0.0;
  for (const auto &f : fields) {
    const auto r = field_residuals(ctx, f);
    cont = std::max(cont, r.continuity);
    flux = std::max(flux, r.flux);
  }
  return {cont <= 1e-8 && flux <= 1e-8,
          std::to_string(fields.size()) + " fields, continuity " + num(cont) + ", flux " + num(flux)};
}

Outcome loop_periodicity() {
  const auto g = shapes::polygon_loop({{0, 0}, {1.2, 0.1}, {0.3, 0.9}});
  const GroundGrid ctx(g, ground_state(g), 2001);
  const std::size_t last = g.edge_count() - 1, end = ctx.points() - 1;
  double df = 0.0, dfp = 0.0, dg = 0.0;
  for (Axis j : {Axis::x, Axis::y}) {
    const DLField f = build_F_loop(ctx, j);
    df = std::max(df, std::abs(f.values[last][end] - f.values[0][0]));
    dfp = std::max(dfp, std::abs(f.derivative(ctx, last, end) - f.derivative(ctx, 0, 0)));
    for (Axis i : {Axis::x, Axis::y}) {
      const DLField gf = build_G_loop(ctx, f, i);
      dg = std::max(dg, std::abs(gf.values[last][end] - gf.values[0][0]));
    }
  }
  return {df <= 1e-10 && dfp <= 1e-10 && dg <= 1e-10,
          "|dF| " + num(df) + ", |dF'| " + num(dfp) + ", |dG| " + num(dg)};
}

Outcome moment_sum() {
  const std::vector<QuantumGraph> graphs{
      shapes::box(1.0), shapes::reference_three_star(deg_to_rad(30.0)),
      shapes::wire({0.6, 0.9, 0.4}, {0.0, 0.8, -0.5}), shapes::seven_edge(),
      shapes::polygon_loop({{0, 0}, {1.2, 0.1}, {0.3, 0.9}}), shapes::two_edge_loop(2.0)};
  double worst = 0.0;
  for (const auto &g : graphs) {
    const GroundGrid ctx(g, ground_state(g), 2001);
    for (Axis a : {Axis::x, Axis::y}) {
      double sum = 0.0;
      for (const auto &m : edge_moments(ctx, a))
        sum += m.value;
      worst = std::max(worst, std::abs(sum));
    }
  }
  return {worst <= 1e-10, std::to_string(graphs.size()) + " graphs, max |sum| " + num(worst)};
}

double trk_at_50(const QuantumGraph &g) { return compute_sos(g, 50).trk_ground; }

Outcome trk_box() {
  const double r = trk_at_50(shapes::box(1.0));
  return {r < 1e-3, "box residual at M = 50: " + num(r)};
}

Outcome trk_loop() {
  const double tri = trk_at_50(shapes::polygon_loop({{0, 0}, {1.2, 0.1}, {0.3, 0.9}}));
  std::vector<Point2> pts;
  for (int i = 0; i < 20; ++i)
    pts.push_back({std::cos(2 * pi * i / 20), std::sin(2 * pi * i / 20)});
  const double gon = trk_at_50(shapes::polygon_loop(pts));
  return {tri < 1e-3, "triangle residual at M = 50: " + num(tri) + " (20-gon " + num(gon) + ")"};
}

Outcome monte_carlo() {
  RunConfig cfg;
  cfg.method = Method::dl;
  cfg.mc.samples = 1000;
  cfg.mc.seed = 42;
  std::size_t records = 0;
  const auto s = run_monte_carlo(cfg, [&](const McRecord &) { ++records; });
  return {s.violations == 0 && s.failures == 0 && records == 1000,
          std::to_string(records) + " samples, " + std::to_string(s.violations) +
              " violations, " + std::to_string(s.failures) + " failures, max |beta| " +
              num(s.max_abs_beta) + ", gamma in [" + num(s.min_gamma) + ", " + num(s.max_gamma) + "]"};
}

Outcome invariance() {
  double scale = 0.0, rot = 0.0;
  for (const auto &g : {shapes::reference_three_star(deg_to_rad(30.0)), shapes::seven_edge()}) {
    const auto a = compute_dl(g);
    const auto b = compute_dl(g.scaled(2.0));
    scale = std::max({scale, max_abs_diff(a.intrinsic.beta, b.intrinsic.beta),
                      max_abs_diff(a.intrinsic.gamma, b.intrinsic.gamma)});
    const double delta = deg_to_rad(37.0);
    const auto r = compute_dl(g.rotated(delta));
    rot = std::max({rot, max_abs_diff(rotate(a.intrinsic.beta, delta), r.intrinsic.beta),
                    max_abs_diff(rotate(a.intrinsic.gamma, delta), r.intrinsic.gamma)});
  }
  return {scale <= 1e-8 && rot <= 1e-8, "rescale " + num(scale) + ", rotation " + num(rot)};
}

Outcome speedup() {
  const auto g = shapes::seven_edge();
  const double t_sos = median_seconds([&] { compute_sos(g, 20); }, 5);
  const double t_dl = median_seconds([&] { compute_dl(g); }, 5);
  const double ratio = t_sos / t_dl;

  RunConfig cfg;
  cfg.graph = "3star:30";
  cfg.bench_modes = {10, 20, 30, 40, 50};
  cfg.bench_repeats = 3;
  const auto rows = run_benchmark(cfg);
  bool monotone = true;
  std::string curve;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].speedup < rows[i - 1].speedup)
      monotone = false;
    curve += (i ? " " : "") + std::to_string(rows[i].modes) + ":" + num(rows[i].speedup);
  }
  return {ratio >= 5.0 && monotone, "seven-edge t_SOS(20)/t_DL " + num(ratio) +
                                        "; 3-star curve " + curve};
}

Outcome grid_convergence() {
  double worst = 0.0;
  for (double deg : {0.0, 30.0, 90.0, 135.0}) {
    const auto g = shapes::reference_three_star(deg_to_rad(deg));
    DLOptions fine;
    fine.grid_points = 4001;
    worst = std::max(worst, max_abs_diff(compute_dl(g).intrinsic.beta,
                                         compute_dl(g, fine).intrinsic.beta));
  }
  return {worst < 1e-6, "max beta change 2001 -> 4001: " + num(worst)};
}

} // namespace

int main() {
  struct Criterion {
    std::string id;
    std::string name;
    bool gated;
    std::function<Outcome()> run;
  };
  std::vector<SweepRow> rows;
  const std::vector<Criterion> criteria{
      {"1", "SOS/DL beta on the 3-star sweep", true,
       [&] {
         rows = reference_sweep();
         return sweep_beta(rows);
       }},
      {"2", "SOS/DL gamma on the 3-star sweep", true, [&] { return sweep_gamma(rows); }},
      {"3", "seven-edge DL vs SOS", true, seven_edge},
      {"4", "degeneracy detection", true, degeneracy},
      {"5", "spectral reconstruction of F", true, reconstruction},
      {"6", "seven-edge vertex residuals", true, vertex_residuals},
      {"7", "loop periodicity", true, loop_periodicity},
      {"8a", "edge moments sum to zero", true, moment_sum},
      {"8b", "TRK residual on the box", true, trk_box},
      {"8c", "TRK residual on a loop", true, trk_loop},
      {"8d", "Monte Carlo bounds", true, monte_carlo},
      {"9", "scale and rotation invariance", true, invariance},
      {"10", "speedup (soft, not gated)", false, speedup},
      {"11", "grid convergence", true, grid_convergence},
  };
  int failed = 0;
  for (const auto &c : criteria) {
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception &e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("criterion %-3s %s  %s: %s\n", c.id.c_str(), o.pass ? "PASS" : "FAIL",
                c.name.c_str(), o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass && c.gated)
      ++failed;
  }
  std::printf("%d gated criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
