// enda - ensemble transform data assimilation experiments
//
// Subcommands: run, reference-is, sweep-loc, summarize, solve-darcy, gen-prior.
// Each experiment is described by a key = value config file; `enda run --schema`
// prints the accepted keys.

#include <CLI11.hpp>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "enda/experiments.hpp"
#include "enda/io.hpp"
#include "enda/metrics.hpp"
#include "enda/priors_fields.hpp"
#include "enda/snapshot.hpp"
#include "enda/version.hpp"

namespace fs = std::filesystem;

namespace {

enda::ExperimentConfig load_config(const std::string& path, const std::string& output_dir) {
  enda::ExperimentConfig cfg = enda::ExperimentConfig::parse_file(path);
  if (!output_dir.empty()) cfg.output_dir = output_dir;
  return cfg;
}

std::vector<double> parse_radii(const std::string& text) {
  std::vector<double> radii;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) radii.push_back(enda::parse_double(item));
  }
  return radii;
}

int run_command(const std::string& config_path, const std::string& output_dir) {
  const enda::ExperimentConfig cfg = load_config(config_path, output_dir);
  const auto results = enda::run_twin(cfg);
  std::size_t failed = 0;
  for (const auto& r : results)
    if (!r.ok) ++failed;
  std::cout << "wrote " << results.size() << " replicate rows to " << cfg.output_dir
            << (failed ? " (" + std::to_string(failed) + " error rows)" : "") << "\n";
  return 0;
}

int reference_command(const std::string& config_path, const std::string& output_dir,
                      long size) {
  const enda::ExperimentConfig cfg = load_config(config_path, output_dir);
  const enda::ReferenceArchive archive = enda::run_reference_is(cfg, size);
  std::cout << "archived " << archive.samples.rows() << " weighted samples ("
            << archive.param_names.size() << " parameters) in " << cfg.output_dir << "\n";
  return 0;
}

int sweep_command(const std::string& config_path, const std::string& output_dir,
                  const std::string& radii_text) {
  const enda::ExperimentConfig cfg = load_config(config_path, output_dir);
  const std::vector<double> radii = parse_radii(radii_text);
  const enda::LocalizationSweep sweep = enda::sweep_localization(cfg, radii);
  std::cout << "radius -> mean rmse_after\n";
  for (std::size_t i = 0; i < sweep.radii.size(); ++i)
    std::cout << "  " << enda::format_double(sweep.radii[i]) << " -> "
              << enda::format_double(sweep.mean_rmse_after[i]) << "\n";
  std::cout << "best radius: " << enda::format_double(sweep.best_radius) << "\n";
  return 0;
}

int summarize_command(const std::string& input, const std::string& output) {
  const enda::CsvTable replicates = enda::read_csv_table(input);
  const enda::CsvTable summary = enda::summarize(replicates);
  if (output.empty()) {
    std::cout << enda::csv_to_string(summary);
  } else {
    enda::write_csv_table(output, summary);
    std::cout << "wrote " << summary.rows.size() << " summary rows to " << output << "\n";
  }
  return 0;
}

int solve_darcy_command(int n, double uniform_k, bool layered, const std::string& field_csv,
                        double sigma, const std::string& out_dir) {
  const enda::GridSpec grid = enda::GridSpec::unit(n);
  enda::PermeabilityField k;
  if (!field_csv.empty()) {
    k.k = enda::read_field_csv(field_csv, n);
  } else if (layered) {
    k = enda::layered_permeability(enda::layered_truth(), grid);
  } else {
    k.k = Eigen::VectorXd::Constant(grid.cell_count(), uniform_k);
  }

  const enda::PressureField p = enda::solve_pressure(k, grid);
  enda::ObservationOperatorSpec spec;
  spec.sigma = sigma;
  spec.locations = enda::lattice_observation_locations(4);
  const Eigen::VectorXd observed = enda::observe(p, grid, spec);

  fs::create_directories(out_dir);
  enda::write_field_csv((fs::path(out_dir) / "pressure.csv").string(), p.p, n);
  enda::write_field_csv((fs::path(out_dir) / "permeability.csv").string(), k.k, n);
  enda::Snapshot snap;
  snap.set("pressure", p.p);
  snap.set("permeability", k.k);
  snap.save((fs::path(out_dir) / "fields.snap").string());
  enda::CsvTable obs_table;
  obs_table.columns = {"x", "y", "value"};
  for (Eigen::Index l = 0; l < observed.size(); ++l)
    obs_table.rows.push_back({enda::format_double(spec.locations(l, 0)),
                              enda::format_double(spec.locations(l, 1)),
                              enda::format_double(observed(l))});
  enda::write_csv_table((fs::path(out_dir) / "observations.csv").string(), obs_table);
  std::cout << "wrote pressure.csv, permeability.csv, observations.csv to " << out_dir
            << "\n";
  return 0;
}

int gen_prior_command(const std::string& config_path, const std::string& output_dir,
                      long size, int replicate) {
  enda::ExperimentConfig cfg = load_config(config_path, output_dir);
  if (cfg.output_dir.empty()) throw enda::ConfigError("output_dir is required");
  const enda::ProblemSetup setup = enda::build_problem(cfg);
  const Eigen::Index m = size > 0 ? size : cfg.ensemble_sizes.front();
  const enda::Ensemble prior = enda::draw_prior(setup, cfg, m, replicate);

  fs::create_directories(cfg.output_dir);
  const std::string tag = "prior_M" + std::to_string(m) + "_r" + std::to_string(replicate);
  enda::write_ensemble_csv((fs::path(cfg.output_dir) / (tag + ".csv")).string(), prior);
  enda::write_ensemble_snapshot((fs::path(cfg.output_dir) / (tag + ".snap")).string(),
                                prior);
  std::cout << "wrote " << tag << ".csv and " << tag << ".snap ("
            << prior.member_count() << " members, dim " << prior.dim() << ") to "
            << cfg.output_dir << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ensemble transform data assimilation experiments"};
  app.set_version_flag("--version", std::string("enda ") + enda::kVersion);
  app.require_subcommand(1);

  std::string config_path, output_dir, radii_text, input_csv, output_csv, field_csv;
  bool print_schema = false;
  long size = 0;
  int replicate = 0;
  int grid_n = 50;
  double uniform_k = 5.0;
  bool layered = false;
  double sigma = 0.01;

  CLI::App* run = app.add_subcommand("run", "run the configured twin experiment");
  run->add_option("-c,--config", config_path, "experiment config file");
  run->add_option("-o,--output-dir", output_dir, "override output_dir");
  run->add_flag("--schema", print_schema, "print the config schema and exit");

  CLI::App* reference =
      app.add_subcommand("reference-is", "archive a large-ensemble IS posterior");
  reference->add_option("-c,--config", config_path, "experiment config file")->required();
  reference->add_option("-o,--output-dir", output_dir, "override output_dir");
  reference->add_option("-M,--size", size, "reference ensemble size")->required();

  CLI::App* sweep =
      app.add_subcommand("sweep-loc", "sweep localization radii, report the argmin");
  sweep->add_option("-c,--config", config_path, "experiment config file")->required();
  sweep->add_option("-o,--output-dir", output_dir, "override output_dir");
  sweep->add_option("-r,--radii", radii_text, "comma-separated radius list")->required();

  CLI::App* summary = app.add_subcommand("summarize", "aggregate a replicates.csv");
  summary->add_option("-i,--input", input_csv, "replicates.csv path")->required();
  summary->add_option("-o,--output", output_csv, "summary.csv path (stdout if omitted)");

  CLI::App* darcy =
      app.add_subcommand("solve-darcy", "standalone forward solve for debugging");
  darcy->add_option("-n,--grid-n", grid_n, "cells per side");
  darcy->add_option("--uniform-k", uniform_k, "constant permeability value");
  darcy->add_flag("--layered", layered, "use the two-layer truth field");
  darcy->add_option("--field", field_csv, "permeability field csv (row-major grid)");
  darcy->add_option("--sigma", sigma, "observation kernel width");
  darcy->add_option("-o,--output-dir", output_dir, "output directory")->required();

  CLI::App* prior = app.add_subcommand("gen-prior", "draw and store a prior ensemble");
  prior->add_option("-c,--config", config_path, "experiment config file")->required();
  prior->add_option("-o,--output-dir", output_dir, "override output_dir");
  prior->add_option("-M,--size", size, "ensemble size (default: first configured size)");
  prior->add_option("-r,--replicate", replicate, "replicate index");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      if (print_schema) {
        std::cout << enda::ExperimentConfig::schema() << "\n";
        return 0;
      }
      if (config_path.empty())
        throw enda::ConfigError("run: --config is required (or use --schema)");
      return run_command(config_path, output_dir);
    }
    if (reference->parsed()) return reference_command(config_path, output_dir, size);
    if (sweep->parsed()) return sweep_command(config_path, output_dir, radii_text);
    if (summary->parsed()) return summarize_command(input_csv, output_csv);
    if (darcy->parsed())
      return solve_darcy_command(grid_n, uniform_k, layered, field_csv, sigma, output_dir);
    if (prior->parsed())
      return gen_prior_command(config_path, output_dir, size, replicate);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << "\n";
    return 1;
  }
  return 0;
}
