#pragma once

// Batch front end: single evaluations, rotating-edge sweeps, seeded Monte
// Carlo ensembles and SOS/DL timing, with JSON and CSV output.

#include "qgnlo/dl.hpp"
#include "qgnlo/graph.hpp"
#include "qgnlo/sos.hpp"
#include "qgnlo/tensors.hpp"

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

namespace qgnlo {

class RunError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class Method { sos, dl, both };

Method parse_method(const std::string &s);
std::string method_name(Method m);

struct SweepSpec {
  std::size_t edge = 0; // zero-based edge index whose angle is swept
  double start_deg = 0.0;
  double stop_deg = 360.0;
  std::size_t steps = 73; // points, both ends included; 1 = graph as given
};

enum class Topology { three_star, wire, loop };

Topology parse_topology(const std::string &s);
std::string topology_name(Topology t);

struct MonteCarloSpec {
  Topology topology = Topology::three_star;
  std::size_t samples = 1000;
  std::uint64_t seed = 42;
  // Edge lengths uniform in [length_min, length_max]; angles uniform in
  // [angle_min_deg, angle_max_deg). Loops use random triangle vertices in a
  // square of side length_max instead.
  double length_min = 0.1;
  double length_max = 1.0;
  double angle_min_deg = 0.0;
  double angle_max_deg = 360.0;
  std::size_t edges = 3;
};

struct RunConfig {
  /// Path to a graph document, or a generator name (see resolve_graph).
  std::string graph;
  Method method = Method::dl;
  std::size_t modes = 30;
  std::size_t grid = 2001;
  SweepSpec sweep;
  MonteCarloSpec mc;
  std::vector<std::size_t> bench_modes{10, 20, 30, 40, 50};
  std::size_t bench_repeats = 5;
  /// 0 means QGNLO_WORKERS, else the hardware concurrency.
  std::size_t workers = 0;
  std::string out;
  std::string dump_fields; // directory; empty = off
};

/// Loads `spec` if it names a file, otherwise builds a generator graph:
/// box[:L], 3star[:deg], seven-edge, loop[:L], triangle[:side].
QuantumGraph resolve_graph(const std::string &spec);

std::size_t worker_count(std::size_t requested);

struct MethodResult {
  PolTensors raw;
  PolTensors intrinsic;
  double seconds = 0.0;
};

/// Component-wise |dl - sos| / |sos| (with |sos| floored at 1e-12 of the
/// largest component) plus the largest |dl - sos| over the largest |sos|.
struct Deviations {
  Rank3 beta;
  Rank4 gamma;
  double beta_max = 0.0;
  double gamma_max = 0.0;
};

struct GraphSummary {
  std::string name;
  std::size_t edges = 0;
  std::size_t vertices = 0;
  std::size_t leaves = 0;
  std::size_t cycle_rank = 0;
  double total_length = 0.0;
};

GraphSummary summarize(const QuantumGraph &g);

struct RunResult {
  GraphSummary graph;
  double e0 = 0.0;
  double e1 = 0.0;
  std::optional<MethodResult> sos;
  std::optional<MethodResult> dl;
  std::optional<Deviations> deviation;
  double trk_residual = 0.0;     // SOS only
  double dl_continuity = 0.0;    // DL only
  double dl_flux = 0.0;          // DL only
  bool dl_loop_path = false;
  /// Bound violations and notes; a flagged record is never dropped.
  std::vector<std::string> flags;
  std::string error; // set when the evaluation threw (Monte Carlo only)

  bool flagged() const;
};

/// True if any |beta_int| > 1 + tol or a diagonal gamma_int < -1/4 - tol.
bool violates_bounds(const PolTensors &intrinsic, double tol = 1e-6);

RunResult evaluate(const QuantumGraph &g, Method method, std::size_t modes,
                   std::size_t grid);

RunResult run_single(const RunConfig &cfg);

struct SweepRow {
  double angle_deg = 0.0;
  RunResult result;
};

std::vector<SweepRow> run_sweep(const RunConfig &cfg);

struct McRecord {
  std::size_t index = 0;
  std::vector<double> lengths;
  std::vector<double> angles_deg;
  RunResult result;
};

struct McSummary {
  std::size_t samples = 0;
  std::size_t failures = 0;
  std::size_t violations = 0;
  double max_abs_beta = 0.0;
  double min_gamma = 0.0;
  double max_gamma = 0.0;
  /// Largest SOS/DL beta deviation when both methods ran.
  double max_beta_deviation = 0.0;
  double max_gamma_deviation = 0.0;
};

/// Graph for sample `index`; depends only on (spec, index).
McRecord draw_sample(const MonteCarloSpec &spec, std::size_t index,
                     QuantumGraph *graph_out);

/// Evaluates all samples on worker threads; `sink` sees the records in index
/// order as they become available.
McSummary run_monte_carlo(const RunConfig &cfg,
                          const std::function<void(const McRecord &)> &sink);

struct BenchRow {
  std::size_t modes = 0;
  double sos_seconds = 0.0;
  double sos_gamma_seconds = 0.0; // gamma sum alone, moments precomputed
  double dl_seconds = 0.0;
  double speedup = 0.0;
};

std::vector<BenchRow> run_benchmark(const RunConfig &cfg);

/// Median wall time of `repeats` calls after one untimed warm-up.
double median_seconds(const std::function<void()> &fn, std::size_t repeats);

// Output.
nlohmann::json config_to_json(const RunConfig &cfg);
nlohmann::json result_to_json(const RunResult &r);
/// Intrinsic tensor column names, each led by `prefix` (e.g. "dl_").
std::vector<std::string> tensor_columns(const std::string &prefix);
void write_sweep_csv(std::ostream &os, const RunConfig &cfg,
                     const std::vector<SweepRow> &rows);
void write_mc_header(std::ostream &os, const RunConfig &cfg);
void write_mc_record(std::ostream &os, const RunConfig &cfg, const McRecord &rec);
void write_bench_csv(std::ostream &os, const RunConfig &cfg,
                     const std::vector<BenchRow> &rows);
/// One row per grid node: edge, node, s, x, y, psi0, F_x, F_y, G_xx, ...
void write_fields_csv(std::ostream &os, const GroundGrid &ctx, const DLResult &dl);
/// Solves the ground state again and writes <dir>/fields.csv.
void dump_fields(const QuantumGraph &g, std::size_t grid,
                 const std::filesystem::path &dir);

} // namespace qgnlo
