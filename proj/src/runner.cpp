#include "qgnlo/runner.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>
#include <thread>

namespace qgnlo {

Method parse_method(const std::string &s) {
  if (s == "sos")
    return Method::sos;
  if (s == "dl")
    return Method::dl;
  if (s == "both")
    return Method::both;
  throw RunError("unknown method '" + s + "' (sos, dl, both)");
}

std::string method_name(Method m) {
  switch (m) {
  case Method::sos:
    return "sos";
  case Method::dl:
    return "dl";
  case Method::both:
    return "both";
  }
  return "?";
}

Topology parse_topology(const std::string &s) {
  if (s == "3star")
    return Topology::three_star;
  if (s == "wire")
    return Topology::wire;
  if (s == "loop")
    return Topology::loop;
  throw RunError("unknown topology '" + s + "' (3star, wire, loop)");
}

std::string topology_name(Topology t) {
  switch (t) {
  case Topology::three_star:
    return "3star";
  case Topology::wire:
    return "wire";
  case Topology::loop:
    return "loop";
  }
  return "?";
}

namespace {

bool uses_sos(Method m) { return m != Method::dl; }
bool uses_dl(Method m) { return m != Method::sos; }

double parse_number(const std::string &s, const std::string &what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception &) {
    used = 0;
  }
  if (used != s.size() || !std::isfinite(v))
    throw RunError("bad number '" + s + "' in " + what);
  return v;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

QuantumGraph resolve_graph(const std::string &spec) {
  if (spec.empty())
    throw RunError("no graph given");
  std::error_code ec;
  if (std::filesystem::is_regular_file(spec, ec))
    return load_graph(spec);
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  const bool has_arg = colon != std::string::npos;
  const std::string arg = has_arg ? spec.substr(colon + 1) : std::string{};
  if (name == "box")
    return shapes::box(has_arg ? parse_number(arg, spec) : 1.0);
  if (name == "3star")
    return shapes::reference_three_star(deg_to_rad(has_arg ? parse_number(arg, spec) : 0.0));
  if (name == "seven-edge" && !has_arg)
    return shapes::seven_edge();
  if (name == "loop")
    return shapes::two_edge_loop(has_arg ? parse_number(arg, spec) : 2.0 * std::numbers::pi);
  if (name == "triangle") {
    const double a = has_arg ? parse_number(arg, spec) : 1.0;
    return shapes::polygon_loop({{0.0, 0.0}, {a, 0.0}, {0.5 * a, 0.5 * std::sqrt(3.0) * a}});
  }
  throw RunError("'" + spec + "' is neither a graph file nor a known generator "
                 "(box[:L], 3star[:deg], seven-edge, loop[:L], triangle[:side])");
}

std::size_t worker_count(std::size_t requested) {
  if (const char *env = std::getenv("QGNLO_WORKERS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0)
      return static_cast<std::size_t>(v);
  }
  if (requested > 0)
    return requested;
  return std::max(1u, std::thread::hardware_concurrency());
}

GraphSummary summarize(const QuantumGraph &g) {
  GraphSummary s;
  s.name = g.name();
  s.edges = g.edge_count();
  s.vertices = g.vertex_count();
  s.leaves = g.leaf_count();
  s.cycle_rank = g.cycle_rank();
  s.total_length = g.total_length();
  return s;
}

bool RunResult::flagged() const { return !error.empty() || !flags.empty(); }

bool violates_bounds(const PolTensors &t, double tol) {
  for (double b : t.beta.v)
    if (std::abs(b) > 1.0 + tol)
      return true;
  return t.gamma.at({0, 0, 0, 0}) < -0.25 - tol || t.gamma.at({1, 1, 1, 1}) < -0.25 - tol;
}

namespace {

template <std::size_t Rank>
double relative_deviations(const CartesianTensor<Rank> &sos,
                           const CartesianTensor<Rank> &dl,
                           CartesianTensor<Rank> &out) {
  const double scale = sos.max_abs();
  const double floor = std::max(1e-12 * scale, std::numeric_limits<double>::min());
  double worst = 0.0;
  for (std::size_t f = 0; f < CartesianTensor<Rank>::size; ++f) {
    const double d = std::abs(dl[f] - sos[f]);
    out[f] = d / std::max(std::abs(sos[f]), floor);
    worst = std::max(worst, d);
  }
  return scale > 0.0 ? worst / scale : worst;
}

void check_bounds(RunResult &r, const MethodResult &m, const std::string &tag) {
  if (violates_bounds(m.intrinsic))
    r.flags.push_back(tag + ": intrinsic bound violated");
}

} // namespace

RunResult evaluate(const QuantumGraph &g, Method method, std::size_t modes,
                   std::size_t grid) {
  RunResult r;
  r.graph = summarize(g);
  if (uses_sos(method)) {
    const auto t0 = std::chrono::steady_clock::now();
    SosResult s;
    try {
      s = compute_sos(g, modes);
    } catch (const std::exception &e) {
      throw RunError("SOS on '" + g.name() + "': " + e.what());
    }
    MethodResult m{s.raw, s.intrinsic, seconds_since(t0)};
    r.e0 = s.spectrum.modes[0].energy;
    r.e1 = s.spectrum.modes[1].energy;
    r.trk_residual = s.trk_ground;
    check_bounds(r, m, "sos");
    r.sos = m;
  }
  if (uses_dl(method)) {
    const auto t0 = std::chrono::steady_clock::now();
    DLResult d;
    try {
      d = compute_dl(g, DLOptions{grid, {}, false});
    } catch (const std::exception &e) {
      throw RunError("DL on '" + g.name() + "': " + e.what());
    }
    MethodResult m{d.raw, d.intrinsic, seconds_since(t0)};
    r.e0 = d.e0;
    r.e1 = d.e0 + d.e10;
    r.dl_continuity = d.max_continuity_residual;
    r.dl_flux = d.max_flux_residual;
    r.dl_loop_path = d.loop_path;
    check_bounds(r, m, "dl");
    r.dl = m;
  }
  if (r.sos && r.dl) {
    Deviations dev;
    dev.beta_max = relative_deviations(r.sos->intrinsic.beta, r.dl->intrinsic.beta, dev.beta);
    dev.gamma_max = relative_deviations(r.sos->intrinsic.gamma, r.dl->intrinsic.gamma, dev.gamma);
    r.deviation = dev;
  }
  return r;
}

RunResult run_single(const RunConfig &cfg) {
  const QuantumGraph g = resolve_graph(cfg.graph);
  RunResult r = evaluate(g, cfg.method, cfg.modes, cfg.grid);
  if (!cfg.dump_fields.empty())
    dump_fields(g, cfg.grid, cfg.dump_fields);
  return r;
}

namespace {

/// Runs fn(i) for i in [0, n) on `workers` threads and hands results to
/// emit(i, value) in index order.
template <typename T>
void ordered_parallel(std::size_t n, std::size_t workers,
                      const std::function<T(std::size_t)> &fn,
                      const std::function<void(std::size_t, T &)> &emit) {
  std::vector<std::optional<T>> slots(n);
  std::mutex mu;
  std::size_t next_emit = 0;
  std::atomic<std::size_t> next_task{0};
  std::exception_ptr failure;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next_task.fetch_add(1);
      if (i >= n)
        return;
      T value;
      try {
        value = fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!failure)
          failure = std::current_exception();
        next_task = n;
        return;
      }
      std::lock_guard lock(mu);
      slots[i] = std::move(value);
      while (!failure && next_emit < n && slots[next_emit]) {
        try {
          emit(next_emit, *slots[next_emit]);
        } catch (...) {
          failure = std::current_exception();
          next_task = n;
          break;
        }
        slots[next_emit].reset();
        ++next_emit;
      }
    }
  };
  const std::size_t count = std::max<std::size_t>(1, std::min(workers, n));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < count; ++w)
    pool.emplace_back(work);
  work();
  for (auto &t : pool)
    t.join();
  if (failure)
    std::rethrow_exception(failure);
}

} // namespace

std::vector<SweepRow> run_sweep(const RunConfig &cfg) {
  const QuantumGraph g = resolve_graph(cfg.graph);
  const SweepSpec &sw = cfg.sweep;
  if (sw.steps < 1)
    throw RunError("sweep needs at least one step");
  if (sw.edge >= g.edge_count())
    throw RunError("sweep edge " + std::to_string(sw.edge + 1) + " out of range (graph has " +
                   std::to_string(g.edge_count()) + " edges)");
  std::vector<SweepRow> rows;
  ordered_parallel<SweepRow>(
      sw.steps, worker_count(cfg.workers),
      [&](std::size_t i) {
        SweepRow row;
        if (sw.steps == 1) {
          row.angle_deg = rad_to_deg(g.edge(sw.edge).angle);
          row.result = evaluate(g, cfg.method, cfg.modes, cfg.grid);
        } else {
          row.angle_deg = sw.start_deg + (sw.stop_deg - sw.start_deg) * static_cast<double>(i) /
                                             static_cast<double>(sw.steps - 1);
          const QuantumGraph gi = g.with_edge_angle(sw.edge, deg_to_rad(row.angle_deg));
          row.result = evaluate(gi, cfg.method, cfg.modes, cfg.grid);
        }
        return row;
      },
      [&](std::size_t, SweepRow &row) { rows.push_back(std::move(row)); });
  return rows;
}

namespace {

class SampleRng {
public:
  SampleRng(std::uint64_t seed, std::size_t index) {
    const auto idx = static_cast<std::uint64_t>(index);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(idx), static_cast<std::uint32_t>(idx >> 32)};
    engine_.seed(seq);
  }
  // Top 53 bits; unlike std::uniform_real_distribution this is the same on
  // every standard library.
  double uniform(double lo, double hi) {
    const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    return lo + (hi - lo) * u;
  }

private:
  std::mt19937_64 engine_;
};

double triangle_area(const Point2 &a, const Point2 &b, const Point2 &c) {
  return 0.5 * std::abs((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

} // namespace

McRecord draw_sample(const MonteCarloSpec &spec, std::size_t index,
                     QuantumGraph *graph_out) {
  if (!(spec.length_min > 0.0) || !(spec.length_max >= spec.length_min))
    throw RunError("Monte Carlo length range must satisfy 0 < min <= max");
  SampleRng rng(spec.seed, index);
  McRecord rec;
  rec.index = index;
  const std::string name = topology_name(spec.topology) + "#" + std::to_string(index);
  std::optional<QuantumGraph> g;
  if (spec.topology == Topology::loop) {
    // Triangle with vertices in the square; redraw slivers.
    const double side = spec.length_max;
    std::vector<Point2> pts;
    for (int attempt = 0;; ++attempt) {
      if (attempt == 1000)
        throw RunError("could not draw a non-degenerate triangle");
      pts.clear();
      for (int v = 0; v < 3; ++v)
        pts.push_back({rng.uniform(0.0, side), rng.uniform(0.0, side)});
      double shortest = std::numeric_limits<double>::infinity();
      for (int v = 0; v < 3; ++v) {
        const Point2 &a = pts[v], &b = pts[(v + 1) % 3];
        shortest = std::min(shortest, std::hypot(b.x - a.x, b.y - a.y));
      }
      if (shortest >= spec.length_min && triangle_area(pts[0], pts[1], pts[2]) > 0.01 * side * side)
        break;
    }
    for (int v = 0; v < 3; ++v) {
      const Point2 &a = pts[v], &b = pts[(v + 1) % 3];
      rec.lengths.push_back(std::hypot(b.x - a.x, b.y - a.y));
      rec.angles_deg.push_back(rad_to_deg(std::atan2(b.y - a.y, b.x - a.x)));
    }
    g.emplace(shapes::polygon_loop(pts));
  } else {
    if (spec.edges < 1)
      throw RunError("Monte Carlo graphs need at least one edge");
    std::vector<double> lengths, angles;
    for (std::size_t p = 0; p < spec.edges; ++p) {
      lengths.push_back(rng.uniform(spec.length_min, spec.length_max));
      rec.angles_deg.push_back(rng.uniform(spec.angle_min_deg, spec.angle_max_deg));
      angles.push_back(deg_to_rad(rec.angles_deg.back()));
    }
    rec.lengths = lengths;
    g.emplace(spec.topology == Topology::three_star ? shapes::star(lengths, angles)
                                                    : shapes::wire(lengths, angles));
  }
  std::vector<EdgeSpec> specs = g->specs();
  QuantumGraph named(std::move(specs), name, g->origin());
  if (graph_out)
    *graph_out = std::move(named);
  return rec;
}

McSummary run_monte_carlo(const RunConfig &cfg,
                          const std::function<void(const McRecord &)> &sink) {
  const MonteCarloSpec &spec = cfg.mc;
  McSummary sum;
  sum.min_gamma = std::numeric_limits<double>::infinity();
  sum.max_gamma = -std::numeric_limits<double>::infinity();
  ordered_parallel<McRecord>(
      spec.samples, worker_count(cfg.workers),
      [&](std::size_t i) {
        QuantumGraph g({EdgeSpec{1.0, 0.0, 0, 1}});
        McRecord rec = draw_sample(spec, i, &g);
        try {
          rec.result = evaluate(g, cfg.method, cfg.modes, cfg.grid);
        } catch (const std::exception &e) {
          rec.result = RunResult{};
          rec.result.graph = summarize(g);
          rec.result.error = e.what();
        }
        return rec;
      },
      [&](std::size_t, McRecord &rec) {
        ++sum.samples;
        const RunResult &r = rec.result;
        if (!r.error.empty()) {
          ++sum.failures;
        } else {
          if (r.flagged())
            ++sum.violations;
          for (const auto *m : {&r.sos, &r.dl}) {
            if (!*m)
              continue;
            const PolTensors &t = (*m)->intrinsic;
            sum.max_abs_beta = std::max(sum.max_abs_beta, t.beta.max_abs());
            for (double gv : {t.gamma.at({0, 0, 0, 0}), t.gamma.at({1, 1, 1, 1})}) {
              sum.min_gamma = std::min(sum.min_gamma, gv);
              sum.max_gamma = std::max(sum.max_gamma, gv);
            }
          }
          if (r.deviation) {
            sum.max_beta_deviation = std::max(sum.max_beta_deviation, r.deviation->beta_max);
            sum.max_gamma_deviation = std::max(sum.max_gamma_deviation, r.deviation->gamma_max);
          }
        }
        if (sink)
          sink(rec);
      });
  if (sum.samples == sum.failures) {
    sum.min_gamma = 0.0;
    sum.max_gamma = 0.0;
  }
  return sum;
}

double median_seconds(const std::function<void()> &fn, std::size_t repeats) {
  fn();
  std::vector<double> t;
  for (std::size_t i = 0; i < std::max<std::size_t>(1, repeats); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    t.push_back(seconds_since(t0));
  }
  std::sort(t.begin(), t.end());
  const std::size_t n = t.size();
  return n % 2 == 1 ? t[n / 2] : 0.5 * (t[n / 2 - 1] + t[n / 2]);
}

std::vector<BenchRow> run_benchmark(const RunConfig &cfg) {
  const QuantumGraph g = resolve_graph(cfg.graph);
  if (cfg.bench_modes.empty())
    throw RunError("benchmark needs at least one mode count");
  // DL pays for its own two-mode spectral solve plus the quadratures.
  const DLOptions dl_opts{cfg.grid, {}, false};
  const double t_dl = median_seconds([&] { (void)compute_dl(g, dl_opts); }, cfg.bench_repeats);
  std::vector<BenchRow> rows;
  for (std::size_t m : cfg.bench_modes) {
    BenchRow row;
    row.modes = m;
    row.dl_seconds = t_dl;
    row.sos_seconds = median_seconds([&] { (void)compute_sos(g, m); }, cfg.bench_repeats);
    const SosResult s = compute_sos(g, m);
    const auto energies = s.spectrum.energies();
    row.sos_gamma_seconds =
        median_seconds([&] { (void)gamma_sos(s.mx, s.my, energies); }, cfg.bench_repeats);
    row.speedup = row.sos_seconds / t_dl;
    rows.push_back(row);
  }
  return rows;
}

// ---- output ---------------------------------------------------------------

nlohmann::json config_to_json(const RunConfig &cfg) {
  nlohmann::json j;
  j["graph"] = cfg.graph;
  j["method"] = method_name(cfg.method);
  j["modes"] = cfg.modes;
  j["grid"] = cfg.grid;
  j["seed"] = cfg.mc.seed;
  j["sweep"] = {{"edge", cfg.sweep.edge + 1},
                {"start_deg", cfg.sweep.start_deg},
                {"stop_deg", cfg.sweep.stop_deg},
                {"steps", cfg.sweep.steps}};
  j["monte_carlo"] = {{"topology", topology_name(cfg.mc.topology)},
                      {"samples", cfg.mc.samples},
                      {"seed", cfg.mc.seed},
                      {"edges", cfg.mc.edges},
                      {"length_distribution", "uniform"},
                      {"length_min", cfg.mc.length_min},
                      {"length_max", cfg.mc.length_max},
                      {"angle_distribution", "uniform"},
                      {"angle_min_deg", cfg.mc.angle_min_deg},
                      {"angle_max_deg", cfg.mc.angle_max_deg}};
  j["bench_modes"] = cfg.bench_modes;
  j["bench_repeats"] = cfg.bench_repeats;
  return j;
}

namespace {

template <std::size_t Rank>
nlohmann::json tensor_json(const CartesianTensor<Rank> &t) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t f = 0; f < CartesianTensor<Rank>::size; ++f)
    j[CartesianTensor<Rank>::label(f)] = t[f];
  return j;
}

nlohmann::json method_json(const MethodResult &m) {
  return {{"beta_raw", tensor_json(m.raw.beta)},
          {"gamma_raw", tensor_json(m.raw.gamma)},
          {"beta_intrinsic", tensor_json(m.intrinsic.beta)},
          {"gamma_intrinsic", tensor_json(m.intrinsic.gamma)},
          {"seconds", m.seconds}};
}

} // namespace

nlohmann::json result_to_json(const RunResult &r) {
  nlohmann::json j;
  j["graph"] = {{"name", r.graph.name},
                {"edges", r.graph.edges},
                {"vertices", r.graph.vertices},
                {"leaves", r.graph.leaves},
                {"cycle_rank", r.graph.cycle_rank},
                {"total_length", r.graph.total_length}};
  j["e0"] = r.e0;
  j["e1"] = r.e1;
  j["e10"] = r.e1 - r.e0;
  if (r.sos) {
    j["sos"] = method_json(*r.sos);
    j["sos"]["trk_residual"] = r.trk_residual;
  }
  if (r.dl) {
    j["dl"] = method_json(*r.dl);
    j["dl"]["vertex_continuity_residual"] = r.dl_continuity;
    j["dl"]["vertex_flux_residual"] = r.dl_flux;
    j["dl"]["loop_path"] = r.dl_loop_path;
  }
  if (r.deviation) {
    j["deviation"] = {{"beta_relative", tensor_json(r.deviation->beta)},
                      {"gamma_relative", tensor_json(r.deviation->gamma)},
                      {"beta_max_over_scale", r.deviation->beta_max},
                      {"gamma_max_over_scale", r.deviation->gamma_max}};
  }
  const MethodResult *any = r.dl ? &*r.dl : (r.sos ? &*r.sos : nullptr);
  if (any)
    j["beta_vanishes"] = any->intrinsic.beta.max_abs() < 1e-8;
  j["flags"] = r.flags;
  if (!r.error.empty())
    j["error"] = r.error;
  return j;
}

std::vector<std::string> tensor_columns(const std::string &prefix) {
  std::vector<std::string> cols;
  for (std::size_t f = 0; f < Rank3::size; ++f)
    cols.push_back(prefix + "beta_" + Rank3::label(f));
  for (std::size_t f = 0; f < Rank4::size; ++f)
    cols.push_back(prefix + "gamma_" + Rank4::label(f));
  return cols;
}

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

void write_row(std::ostream &os, const std::vector<std::string> &cells) {
  for (std::size_t i = 0; i < cells.size(); ++i)
    os << (i ? "," : "") << cells[i];
  os << '\n';
}

void append_tensors(std::vector<std::string> &cells, const std::optional<MethodResult> &m) {
  for (std::size_t f = 0; f < Rank3::size; ++f)
    cells.push_back(m ? fmt(m->intrinsic.beta[f]) : "");
  for (std::size_t f = 0; f < Rank4::size; ++f)
    cells.push_back(m ? fmt(m->intrinsic.gamma[f]) : "");
}

void append_tensor_columns(std::vector<std::string> &cols, Method method) {
  if (uses_sos(method))
    for (auto &c : tensor_columns("sos_"))
      cols.push_back(c);
  if (uses_dl(method))
    for (auto &c : tensor_columns("dl_"))
      cols.push_back(c);
}

void append_method_cells(std::vector<std::string> &cells, Method method, const RunResult &r) {
  if (uses_sos(method))
    append_tensors(cells, r.sos);
  if (uses_dl(method))
    append_tensors(cells, r.dl);
}

std::string join_flags(const RunResult &r) {
  std::string s;
  for (const auto &f : r.flags)
    s += (s.empty() ? "" : ";") + f;
  if (!r.error.empty())
    s += (s.empty() ? "error: " : ";error: ") + r.error;
  // keep the CSV rectangular
  std::replace(s.begin(), s.end(), ',', ' ');
  std::replace(s.begin(), s.end(), '\n', ' ');
  return s;
}

void write_meta(std::ostream &os, const RunConfig &cfg) {
  os << "# " << config_to_json(cfg).dump() << '\n';
}

} // namespace

void write_sweep_csv(std::ostream &os, const RunConfig &cfg,
                     const std::vector<SweepRow> &rows) {
  write_meta(os, cfg);
  std::vector<std::string> cols{"angle_deg", "e0", "e10"};
  append_tensor_columns(cols, cfg.method);
  cols.push_back("flags");
  write_row(os, cols);
  for (const auto &row : rows) {
    std::vector<std::string> cells{fmt(row.angle_deg), fmt(row.result.e0),
                                   fmt(row.result.e1 - row.result.e0)};
    append_method_cells(cells, cfg.method, row.result);
    cells.push_back(join_flags(row.result));
    write_row(os, cells);
  }
}

void write_mc_header(std::ostream &os, const RunConfig &cfg) {
  write_meta(os, cfg);
  std::vector<std::string> cols{"index", "seed"};
  const std::size_t ne = cfg.mc.topology == Topology::loop ? 3 : cfg.mc.edges;
  for (std::size_t p = 0; p < ne; ++p)
    cols.push_back("length_" + std::to_string(p));
  for (std::size_t p = 0; p < ne; ++p)
    cols.push_back("angle_deg_" + std::to_string(p));
  cols.push_back("e0");
  cols.push_back("e10");
  append_tensor_columns(cols, cfg.method);
  if (cfg.method == Method::both) {
    cols.push_back("beta_deviation");
    cols.push_back("gamma_deviation");
  }
  cols.push_back("flagged");
  cols.push_back("flags");
  write_row(os, cols);
}

void write_mc_record(std::ostream &os, const RunConfig &cfg, const McRecord &rec) {
  std::vector<std::string> cells{std::to_string(rec.index), std::to_string(cfg.mc.seed)};
  for (double l : rec.lengths)
    cells.push_back(fmt(l));
  for (double a : rec.angles_deg)
    cells.push_back(fmt(a));
  const RunResult &r = rec.result;
  cells.push_back(fmt(r.e0));
  cells.push_back(fmt(r.e1 - r.e0));
  append_method_cells(cells, cfg.method, r);
  if (cfg.method == Method::both) {
    cells.push_back(r.deviation ? fmt(r.deviation->beta_max) : "");
    cells.push_back(r.deviation ? fmt(r.deviation->gamma_max) : "");
  }
  cells.push_back(r.flagged() ? "1" : "0");
  cells.push_back(join_flags(r));
  write_row(os, cells);
}

void write_bench_csv(std::ostream &os, const RunConfig &cfg,
                     const std::vector<BenchRow> &rows) {
  write_meta(os, cfg);
  write_row(os, {"modes", "sos_seconds", "sos_gamma_seconds", "dl_seconds", "speedup"});
  for (const auto &r : rows)
    write_row(os, {std::to_string(r.modes), fmt(r.sos_seconds), fmt(r.sos_gamma_seconds),
                   fmt(r.dl_seconds), fmt(r.speedup)});
}

void write_fields_csv(std::ostream &os, const GroundGrid &ctx, const DLResult &dl) {
  write_row(os, {"edge", "node", "s", "x", "y", "psi0", "F_x", "F_y", "G_xx", "G_xy",
                 "G_yx", "G_yy"});
  const QuantumGraph &g = ctx.graph();
  for (std::size_t p = 0; p < g.edge_count(); ++p)
    for (std::size_t i = 0; i < ctx.points(); ++i) {
      std::vector<std::string> cells{std::to_string(p), std::to_string(i),
                                     fmt(static_cast<double>(i) * ctx.step(p)),
                                     fmt(ctx.coord(Axis::x)[p][i]), fmt(ctx.coord(Axis::y)[p][i]),
                                     fmt(ctx.psi()[p][i])};
      for (const auto &f : dl.f)
        cells.push_back(fmt(f.values[p][i]));
      for (const auto &row : dl.g)
        for (const auto &f : row)
          cells.push_back(fmt(f.values[p][i]));
      write_row(os, cells);
    }
}

void dump_fields(const QuantumGraph &g, std::size_t grid,
                 const std::filesystem::path &dir) {
  const Spectrum low = find_spectrum(g, 2);
  const GroundGrid ctx(g, low.modes[0], grid);
  const DLResult dl = compute_dl_fields(ctx, low.modes[1].energy - low.modes[0].energy, false);
  std::filesystem::create_directories(dir);
  std::ofstream os(dir / "fields.csv");
  if (!os)
    throw RunError("cannot write " + (dir / "fields.csv").string());
  write_fields_csv(os, ctx, dl);
}

} // namespace qgnlo
