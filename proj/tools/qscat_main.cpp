// Command-line surface: angles | oracle | simulate | compare.
// Exit codes: 0 success, 2 config error, 3 empty branch set,
// 4 degenerate weights, 5 comparison failure.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "qscat/compare.hpp"
#include "qscat/config.hpp"
#include "qscat/csv.hpp"
#include "qscat/ensemble.hpp"
#include "qscat/kinematics.hpp"
#include "qscat/oracle.hpp"
#include "qscat/version.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir;
  CLI::Option* out_opt = nullptr;
  int grid = 0;
  CLI::Option* grid_opt = nullptr;
  double tol = 0.0;
  CLI::Option* tol_opt = nullptr;
  std::uint64_t bins = 0;
  CLI::Option* bins_opt = nullptr;
  std::uint64_t seed = 0;
  CLI::Option* seed_opt = nullptr;
  std::uint64_t shards = 0;
  CLI::Option* shards_opt = nullptr;
  std::string weight_mode;
  CLI::Option* weight_mode_opt = nullptr;
  bool boundary_inclusive = false;
  bool si_units = false;
};

void add_common_options(CLI::App* cmd, CommonOpts& o) {
  cmd->add_option("--config", o.config_path, "JSON config file")->required();
  o.out_opt = cmd->add_option("--out", o.out_dir, "output directory (overrides config output.dir)");
  o.grid_opt = cmd->add_option("--grid", o.grid, "oracle scan grid points (>= 1001)");
  o.tol_opt = cmd->add_option("--tol", o.tol, "oracle refinement tolerance, in (0, 1e-8]");
  o.bins_opt = cmd->add_option("--bins", o.bins, "histogram bin count (>= 2)");
  o.seed_opt = cmd->add_option("--seed", o.seed, "simulation seed (64-bit unsigned)");
  o.shards_opt = cmd->add_option("--shards", o.shards, "simulation shard count (>= 1)");
  o.weight_mode_opt =
      cmd->add_option("--weight-mode", o.weight_mode, "branch weighting: uniform|oracle|table");
  cmd->add_flag("--boundary-inclusive", o.boundary_inclusive,
                "admit branches at |sin theta| = 1");
  auto* si = cmd->add_flag("--si", o.si_units,
                           "report delta_pz using the SI action constant (J*s)");
  cmd->add_flag("--natural-units", "h = 1 (default)")->excludes(si);
}

struct Loaded {
  qscat::cfg::Document doc;
  qscat::ActionConstant h;
  qscat::Beam beam = qscat::Beam::from_characteristic_length(1.0);
  qscat::OracleOptions oracle;
  bool boundary_inclusive = false;
  fs::path out_dir;       // resolved; "." when nothing was requested
  bool out_requested = false;
};

Loaded load(const CommonOpts& o) {
  Loaded lc;
  lc.doc = qscat::cfg::load_config(o.config_path);
  lc.oracle = lc.doc.oracle;
  if (o.grid_opt->count()) {
    if (o.grid < 1001) throw qscat::cfg::config_error("--grid: must be >= 1001");
    lc.oracle.grid_points = o.grid;
  }
  if (o.tol_opt->count()) {
    if (!(o.tol > 0.0) || o.tol > 1e-8)
      throw qscat::cfg::config_error("--tol: must be in (0, 1e-8]");
    lc.oracle.refine_tol = o.tol;
  }
  lc.h = o.si_units ? qscat::ActionConstant::si() : qscat::ActionConstant{};
  lc.beam = lc.doc.beam(lc.h);
  lc.boundary_inclusive = o.boundary_inclusive;
  if (o.out_opt->count()) {
    lc.out_dir = o.out_dir;
    lc.out_requested = true;
  } else if (lc.doc.output_dir) {
    lc.out_dir = *lc.doc.output_dir;
    lc.out_requested = true;
  } else {
    lc.out_dir = ".";
  }
  return lc;
}

// ---------------------------------------------------------------------------
// CSV builders
// ---------------------------------------------------------------------------

std::string angles_csv(const std::vector<qscat::ScatteringBranch>& branches) {
  std::string out = "branch,order,sin_theta,theta_rad,delta_pz\n";
  for (const auto& b : branches) {
    out += qscat::to_string(b.branch);
    out += ',';
    out += std::to_string(b.order);
    out += ',';
    out += qscat::io::format_double(b.sin_theta);
    out += ',';
    out += qscat::io::format_double(b.theta);
    out += ',';
    out += qscat::io::format_double(b.delta_pz);
    out += '\n';
  }
  return out;
}

std::string curve_csv(const qscat::IntensityProfile& profile, int grid_points) {
  std::string out = "sin_theta,intensity\n";
  for (int i = 0; i < grid_points; ++i) {
    const double s = -1.0 + 2.0 * i / (grid_points - 1);
    out += qscat::io::format_double(s);
    out += ',';
    out += qscat::io::format_double(qscat::intensity(profile, s));
    out += '\n';
  }
  return out;
}

std::string extrema_csv(const std::vector<qscat::Extremum>& extrema) {
  std::string out = "sin_theta,kind,value\n";
  for (const auto& e : extrema) {
    out += qscat::io::format_double(e.location);
    out += ',';
    out += qscat::to_string(e.kind);
    out += ',';
    out += qscat::io::format_double(e.value);
    out += '\n';
  }
  return out;
}

std::string histogram_csv(const qscat::PatternHistogram& hist) {
  std::string out = "bin_left,bin_right,count\n";
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    out += qscat::io::format_double(hist.bin_edges[i]);
    out += ',';
    out += qscat::io::format_double(hist.bin_edges[i + 1]);
    out += ',';
    out += std::to_string(hist.counts[i]);
    out += '\n';
  }
  return out;
}

std::string branch_counts_csv(const qscat::SimResult& result) {
  std::string out = "branch,order,sin_theta,count\n";
  for (std::size_t i = 0; i < result.branches.size(); ++i) {
    const auto& b = result.branches[i];
    out += qscat::to_string(b.branch);
    out += ',';
    out += std::to_string(b.order);
    out += ',';
    out += qscat::io::format_double(b.sin_theta);
    out += ',';
    out += std::to_string(result.branch_counts[i]);
    out += '\n';
  }
  return out;
}

std::string comparison_csv(const qscat::ScenarioComparison& comparison) {
  std::string out =
      "branch,order,sin_theta_quantized,sin_theta_oracle,residual,oracle_kind,suppressed_flag\n";
  for (const auto& family : comparison.families) {
    for (const auto& row : family.rows) {
      out += qscat::to_string(row.branch.branch);
      out += ',';
      out += std::to_string(row.branch.order);
      out += ',';
      out += qscat::io::format_double(row.branch.sin_theta);
      out += ',';
      if (row.matched) {
        out += qscat::io::format_double(row.oracle_sin_theta);
        out += ',';
        out += qscat::io::format_double(row.residual);
        out += ',';
        out += qscat::to_string(row.oracle_kind);
      } else {
        out += ",,none";
      }
      out += ',';
      out += row.suppressed ? '1' : '0';
      out += '\n';
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

int cmd_angles(const CommonOpts& o) {
  const Loaded lc = load(o);
  const auto branches =
      qscat::quantized_angles(lc.doc.scenario, lc.beam, lc.boundary_inclusive);
  if (branches.empty()) {
    std::cerr << "no scattering branches: the characteristic length exceeds every "
                 "admissible deflection for this scenario; decrease lambda or enlarge "
                 "the scenario lengths\n";
    return 3;
  }
  const std::string csv = angles_csv(branches);
  std::cout << csv;
  if (lc.out_requested) qscat::io::write_text_file(lc.out_dir / "angles.csv", csv);
  return 0;
}

int cmd_oracle(const CommonOpts& o) {
  const Loaded lc = load(o);
  const auto profile =
      qscat::oracle_profile(lc.doc.scenario, lc.beam, lc.oracle.lattice_planes);
  std::vector<qscat::Extremum> extrema;
  if (profile.kind() == qscat::ProfileKind::lattice) {
    // For the lattice the physically meaningful rows are the principal
    // (Bragg) maxima; finite-N ripple extrema are artifacts of the plane
    // count parameter.
    extrema = qscat::principal_lattice_maxima(profile, lc.oracle);
  } else {
    extrema = qscat::find_extrema(profile, qscat::ExtremaFilter::all, lc.oracle.grid_points,
                                  lc.oracle.refine_tol);
  }
  qscat::io::write_text_file(lc.out_dir / "curve.csv",
                             curve_csv(profile, lc.oracle.grid_points));
  qscat::io::write_text_file(lc.out_dir / "extrema.csv", extrema_csv(extrema));
  std::cout << "wrote " << (lc.out_dir / "curve.csv").string() << " and "
            << (lc.out_dir / "extrema.csv").string() << " (" << extrema.size()
            << " extrema)\n";
  return 0;
}

qscat::SimConfig build_sim_config(const CommonOpts& o, const Loaded& lc) {
  if (!lc.doc.simulation)
    throw qscat::cfg::config_error("simulation: block required for this command");
  const auto& spec = *lc.doc.simulation;
  qscat::SimConfig sc;
  sc.scenario = lc.doc.scenario;
  sc.beam = lc.beam;
  if (!spec.n_particles)
    throw qscat::cfg::config_error("simulation.n_particles: required for this command");
  sc.n_particles = *spec.n_particles;
  if (o.seed_opt->count()) {
    sc.seed = o.seed;
  } else if (spec.seed) {
    sc.seed = *spec.seed;
  } else {
    throw qscat::cfg::config_error("simulation.seed: required (or pass --seed)");
  }
  if (o.weight_mode_opt->count()) {
    sc.weight_mode = qscat::cfg::parse_weight_mode(o.weight_mode, "--weight-mode");
  } else {
    sc.weight_mode = spec.weight_mode;
  }
  sc.table_weights = spec.table_weights;
  if (!spec.screen_distance)
    throw qscat::cfg::config_error("simulation.screen_distance: required for this command");
  sc.screen_distance = *spec.screen_distance;
  if (o.bins_opt->count()) {
    if (o.bins < 2) throw qscat::cfg::config_error("--bins: must be >= 2");
    sc.bins = static_cast<std::uint32_t>(o.bins);
  } else {
    sc.bins = spec.bins;
  }
  sc.bin_range = spec.bin_range;
  if (o.shards_opt->count()) {
    if (o.shards < 1) throw qscat::cfg::config_error("--shards: must be >= 1");
    sc.shards = static_cast<std::uint32_t>(o.shards);
  } else {
    sc.shards = spec.shards;
  }
  sc.boundary_inclusive = lc.boundary_inclusive;
  sc.lattice_planes = lc.oracle.lattice_planes;
  return sc;
}

const char* weight_mode_name(qscat::WeightMode mode) {
  switch (mode) {
    case qscat::WeightMode::uniform: return "uniform";
    case qscat::WeightMode::oracle_weighted: return "oracle";
    case qscat::WeightMode::table: return "table";
  }
  return "?";
}

int cmd_simulate(const CommonOpts& o) {
  const Loaded lc = load(o);
  const qscat::SimConfig sc = build_sim_config(o, lc);
  const qscat::SimResult result = qscat::run(sc);

  const std::string hist = histogram_csv(result.histogram);
  const std::string counts = branch_counts_csv(result);
  const fs::path hist_path = lc.out_dir / "histogram.csv";
  const fs::path counts_path = lc.out_dir / "branch_counts.csv";
  qscat::io::write_text_file(hist_path, hist);
  qscat::io::write_text_file(counts_path, counts);

  json manifest;
  manifest["artifact"] = {{"name", qscat::kArtifactName}, {"version", qscat::kArtifactVersion}};
  manifest["command"] = "simulate";
  manifest["created_utc"] = qscat::io::iso8601_utc_now();
  manifest["seed"] = sc.seed;
  manifest["config"] = lc.doc.raw;
  manifest["effective"] = {
      {"n_particles", sc.n_particles},
      {"weight_mode", weight_mode_name(sc.weight_mode)},
      {"bins", sc.bins},
      {"bin_range", {result.histogram.bin_edges.front(), result.histogram.bin_edges.back()}},
      {"shards", sc.shards},
      {"boundary_inclusive", sc.boundary_inclusive},
      {"branch_count", result.branches.size()},
      {"overflow_low", result.histogram.overflow_low},
      {"overflow_high", result.histogram.overflow_high},
  };
  manifest["outputs"] = json::array({
      {{"path", "histogram.csv"}, {"bytes", hist.size()}, {"fnv1a64", qscat::io::fnv1a64_hex(hist)}},
      {{"path", "branch_counts.csv"},
       {"bytes", counts.size()},
       {"fnv1a64", qscat::io::fnv1a64_hex(counts)}},
  });
  qscat::io::write_text_file(lc.out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "simulated " << sc.n_particles << " particles over " << result.branches.size()
            << " branches; histogram " << hist_path.string() << "\n";
  return 0;
}

int cmd_compare(const CommonOpts& o) {
  const Loaded lc = load(o);
  const auto comparison =
      qscat::compare_scenario(lc.doc.scenario, lc.beam, lc.boundary_inclusive, lc.oracle);
  qscat::io::write_text_file(lc.out_dir / "comparison.csv", comparison_csv(comparison));

  for (const auto& family : comparison.families) {
    std::size_t suppressed = 0;
    std::size_t informational = 0;
    for (const auto& row : family.rows) {
      suppressed += row.suppressed ? 1 : 0;
      informational += row.informational ? 1 : 0;
    }
    std::printf("family %-14s %3zu branches, %3zu matched, %3zu suppressed, max residual %.3e (threshold %.3e)%s\n",
                qscat::to_string(family.family), family.rows.size(), family.matched_count(),
                suppressed, family.max_residual(), family.residual_threshold,
                family.pass() ? "" : "  <-- FAIL");
    if (family.unmatched_count() > 0 && family.unmatched_allowed)
      std::printf("  note: %zu %s branch(es) without an oracle partner (inside the central lobe)\n",
                  family.unmatched_count(), qscat::to_string(family.family));
    if (informational > 0)
      std::printf("  note: %zu forward order row(s) paired with the central maximum (informational)\n",
                  informational);
  }
  const bool ok = comparison.pass();
  std::printf("comparison: %s\n", ok ? "PASS" : "FAIL");
  return ok ? 0 : 5;
}

int guarded(const std::function<int()>& body) {
  try {
    return body();
  } catch (const qscat::cfg::config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const qscat::empty_branch_set_error& e) {
    std::cerr << "no scattering branches: " << e.what() << "\n";
    return 3;
  } catch (const qscat::degenerate_weights_error& e) {
    std::cerr << "degenerate weights: " << e.what()
              << " (hint: rerun with --weight-mode uniform)\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete momentum-transfer scattering: quantized angles, wave oracle, "
               "ensemble simulation"};
  app.require_subcommand(1);

  CommonOpts angles_opts, oracle_opts, simulate_opts, compare_opts;
  auto* angles = app.add_subcommand("angles", "emit the discrete branch table for a scenario");
  add_common_options(angles, angles_opts);
  auto* oracle = app.add_subcommand("oracle", "emit the wave-oracle intensity curve and extrema");
  add_common_options(oracle, oracle_opts);
  auto* simulate = app.add_subcommand("simulate", "run the particle ensemble into a histogram");
  add_common_options(simulate, simulate_opts);
  auto* compare =
      app.add_subcommand("compare", "match quantized branches against oracle extrema");
  add_common_options(compare, compare_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (angles->parsed()) return guarded([&] { return cmd_angles(angles_opts); });
  if (oracle->parsed()) return guarded([&] { return cmd_oracle(oracle_opts); });
  if (simulate->parsed()) return guarded([&] { return cmd_simulate(simulate_opts); });
  if (compare->parsed()) return guarded([&] { return cmd_compare(compare_opts); });
  return 1;
}
