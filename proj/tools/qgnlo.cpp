// qgnlo: hyperpolarizabilities of planar quantum graphs.
//
//   qgnlo run   --graph g.json --method both --modes 30 --grid 2001 --out r.json
//   qgnlo sweep --graph g.json --rotate-edge 3 --steps 73 --out sweep.csv
//   qgnlo mc    --topology 3star --samples 1000 --seed 42 --out mc.csv
//   qgnlo bench --graph g.json --modes 10,20,30,40,50 --out bench.csv
//
// --graph also accepts generator names: box[:L], 3star[:deg], seven-edge,
// loop[:L], triangle[:side].

#include "qgnlo/runner.hpp"

#include "CLI11.hpp"

#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

namespace {

using namespace qgnlo;

/// stdout when path is empty or "-".
class Output {
public:
  explicit Output(const std::string &path) {
    if (!path.empty() && path != "-") {
      file_ = std::make_unique<std::ofstream>(path);
      if (!*file_)
        throw RunError("cannot open " + path + " for writing");
    }
  }
  std::ostream &stream() { return file_ ? *file_ : std::cout; }

private:
  std::unique_ptr<std::ofstream> file_;
};

void add_common(CLI::App *cmd, RunConfig &cfg, std::string &method) {
  cmd->add_option("--method", method, "sos, dl or both")
      ->check(CLI::IsMember({"sos", "dl", "both"}));
  cmd->add_option("--grid", cfg.grid, "grid points per edge (odd)")->check(CLI::Range(3, 1 << 24));
  cmd->add_option("--out", cfg.out, "output file (default stdout)");
  cmd->add_option("--workers", cfg.workers, "worker threads (QGNLO_WORKERS overrides)");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Hyperpolarizabilities of planar quantum graphs"};
  app.require_subcommand(1);

  RunConfig cfg;
  std::string method = "dl";
  std::string topology = "3star";
  std::string mode_list = "10,20,30,40,50";
  std::size_t rotate_edge = 1;

  auto *run = app.add_subcommand("run", "evaluate one graph");
  run->add_option("--graph", cfg.graph, "graph file or generator")->required();
  run->add_option("--modes", cfg.modes, "SOS excited states")->check(CLI::PositiveNumber);
  run->add_option("--dump-fields", cfg.dump_fields, "write sampled F/G fields to this directory");
  add_common(run, cfg, method);

  auto *sweep = app.add_subcommand("sweep", "rotate one edge through a range of angles");
  sweep->add_option("--graph", cfg.graph, "graph file or generator")->required();
  sweep->add_option("--rotate-edge", rotate_edge, "edge to rotate (1-based)")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--steps", cfg.sweep.steps, "angles, both ends included")
      ->check(CLI::PositiveNumber);
  sweep->add_option("--start", cfg.sweep.start_deg, "first angle in degrees");
  sweep->add_option("--stop", cfg.sweep.stop_deg, "last angle in degrees");
  sweep->add_option("--modes", cfg.modes, "SOS excited states")->check(CLI::PositiveNumber);
  add_common(sweep, cfg, method);

  auto *mc = app.add_subcommand("mc", "seeded Monte Carlo over random geometries");
  mc->add_option("--topology", topology, "3star, wire or loop")
      ->check(CLI::IsMember({"3star", "wire", "loop"}));
  mc->add_option("--samples", cfg.mc.samples, "number of graphs");
  mc->add_option("--seed", cfg.mc.seed, "RNG seed");
  mc->add_option("--edges", cfg.mc.edges, "edges per star or wire")->check(CLI::PositiveNumber);
  mc->add_option("--length-min", cfg.mc.length_min, "smallest edge length");
  mc->add_option("--length-max", cfg.mc.length_max, "largest edge length");
  mc->add_option("--angle-min", cfg.mc.angle_min_deg, "smallest angle in degrees");
  mc->add_option("--angle-max", cfg.mc.angle_max_deg, "largest angle in degrees");
  mc->add_option("--modes", cfg.modes, "SOS excited states")->check(CLI::PositiveNumber);
  add_common(mc, cfg, method);

  auto *bench = app.add_subcommand("bench", "time SOS against DL");
  bench->add_option("--graph", cfg.graph, "graph file or generator")->required();
  bench->add_option("--modes", mode_list, "comma-separated SOS mode counts");
  bench->add_option("--repeats", cfg.bench_repeats, "timed repeats (median reported)")
      ->check(CLI::PositiveNumber);
  bench->add_option("--grid", cfg.grid, "grid points per edge (odd)");
  bench->add_option("--out", cfg.out, "output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.method = parse_method(method);
    cfg.mc.topology = parse_topology(topology);
    cfg.sweep.edge = rotate_edge - 1;

    if (*run) {
      const RunResult r = run_single(cfg);
      nlohmann::json doc{{"config", config_to_json(cfg)}, {"result", result_to_json(r)}};
      Output out(cfg.out);
      out.stream() << doc.dump(2) << '\n';
    } else if (*sweep) {
      const auto rows = run_sweep(cfg);
      Output out(cfg.out);
      write_sweep_csv(out.stream(), cfg, rows);
    } else if (*mc) {
      Output out(cfg.out);
      write_mc_header(out.stream(), cfg);
      const McSummary s = run_monte_carlo(cfg, [&](const McRecord &rec) {
        write_mc_record(out.stream(), cfg, rec);
        if (!rec.result.error.empty())
          std::cerr << "sample " << rec.index << " failed: " << rec.result.error << '\n';
      });
      nlohmann::json summary{{"samples", s.samples},
                             {"failures", s.failures},
                             {"violations", s.violations},
                             {"max_abs_beta_intrinsic", s.max_abs_beta},
                             {"min_gamma_intrinsic", s.min_gamma},
                             {"max_gamma_intrinsic", s.max_gamma}};
      if (cfg.method == Method::both) {
        summary["max_beta_deviation"] = s.max_beta_deviation;
        summary["max_gamma_deviation"] = s.max_gamma_deviation;
      }
      std::cerr << summary.dump() << '\n';
      return s.violations == 0 && s.failures == 0 ? 0 : 2;
    } else if (*bench) {
      cfg.method = Method::both;
      cfg.bench_modes.clear();
      std::stringstream ss(mode_list);
      for (std::string tok; std::getline(ss, tok, ',');) {
        if (tok.empty())
          continue;
        const long v = std::stol(tok);
        if (v < 1)
          throw RunError("mode counts must be positive");
        cfg.bench_modes.push_back(static_cast<std::size_t>(v));
      }
      const auto rows = run_benchmark(cfg);
      Output out(cfg.out);
      write_bench_csv(out.stream(), cfg, rows);
    }
  } catch (const std::exception &e) {
    std::cerr << "qgnlo: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
