#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "enda/config.hpp"
#include "enda/ensemble.hpp"
#include "enda/forward_models.hpp"
#include "enda/priors_fields.hpp"

namespace enda {

// One (method, ensemble size, replicate) outcome. Metrics that do not apply
// to the configured problem stay NaN and are written as empty CSV fields.
struct ReplicateResult {
  std::string method;
  Eigen::Index ensemble_size = 0;
  int replicate = 0;
  bool ok = true;
  std::string error;

  double misfit_before = std::numeric_limits<double>::quiet_NaN();
  double misfit_after = std::numeric_limits<double>::quiet_NaN();
  double rmse_before = std::numeric_limits<double>::quiet_NaN();
  double rmse_after = std::numeric_limits<double>::quiet_NaN();
  double variance_after = std::numeric_limits<double>::quiet_NaN();
  double relative_error_before = std::numeric_limits<double>::quiet_NaN();
  double relative_error_after = std::numeric_limits<double>::quiet_NaN();
  Eigen::Vector3d mode_sq_error =
      Eigen::Vector3d::Constant(std::numeric_limits<double>::quiet_NaN());
  std::vector<double> kl_divergences;  // one per tracked parameter, if computed
  double wall_time = 0.0;              // seconds, excluded from determinism checks
};

// Everything derived once per experiment: truth, observations, the forward
// map and the tracked-parameter bookkeeping.
struct ProblemSetup {
  Problem problem = Problem::Cubic;
  GridSpec grid;
  ObservationOperatorSpec obs_spec;
  ObservationSet observations;
  Eigen::MatrixXd obs_matrix;        // N_y x n^2 (darcy problems)
  PermeabilityField truth_k;         // darcy problems
  Eigen::VectorXd truth_logperm;     // darcy problems
  Eigen::VectorXd truth_params;      // raw tracked coordinates
  KLBasis basis;                     // kl-field
  std::vector<std::string> tracked_names;
  std::uint64_t truth_seed = 0;
  std::uint64_t noise_seed = 0;
};

ProblemSetup build_problem(const ExperimentConfig& cfg);

// Prior draw for (M, replicate) in assimilation coordinates (logit/log for
// five-param, modes for kl-field).
Ensemble draw_prior(const ProblemSetup& setup, const ExperimentConfig& cfg,
                    Eigen::Index ensemble_size, int replicate);

// h(u_m) for every member, members in parallel.
PredictedData forward_map(const ProblemSetup& setup, const Ensemble& e);

// Raw tracked coordinates per member (inverse transforms applied).
Eigen::MatrixXd tracked_parameters(const ProblemSetup& setup, const Ensemble& e);

// Weighted IS samples persisted for later KL-divergence comparisons.
struct ReferenceArchive {
  Problem problem = Problem::Cubic;
  std::vector<std::string> param_names;
  Eigen::MatrixXd samples;  // M_ref x P raw tracked coordinates
  Eigen::VectorXd weights;

  void save(const std::string& dir) const;
  static ReferenceArchive load(const std::string& dir);
};

// Runs the configured twin experiment over all (M, replicate) pairs, writes
// replicates.csv, summary.csv, pdf_<param>.csv and run-manifest into
// cfg.output_dir, and returns the per-replicate rows.
std::vector<ReplicateResult> run_twin(const ExperimentConfig& cfg);

// Large-ensemble importance sampling; persists the archive (and posterior
// histograms) into cfg.output_dir.
ReferenceArchive run_reference_is(const ExperimentConfig& cfg, Eigen::Index reference_size);

struct LocalizationSweep {
  std::vector<double> radii;
  std::vector<double> mean_rmse_after;
  double best_radius = 0.0;
};

// run_twin per radius (outputs under <output_dir>/radius_<r>), reporting the
// argmin radius by mean RMSE after assimilation.
LocalizationSweep sweep_localization(const ExperimentConfig& cfg,
                                     const std::vector<double>& radii);

// Raw CSV table, kept as text so files round-trip byte-exactly.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  std::optional<std::size_t> column_index(const std::string& name) const;
};

CsvTable read_csv_table(const std::string& path);
void write_csv_table(const std::string& path, const CsvTable& table);
std::string csv_to_string(const CsvTable& table);

CsvTable replicates_to_table(const ExperimentConfig& cfg,
                             const std::vector<ReplicateResult>& results,
                             const std::vector<std::string>& tracked_names);

// Per (method, M): mean/min/max of every metric column over ok rows, the
// misfit and RMSE deltas, and the percentage of replicates with
// rmse_after - rmse_before > 0.
CsvTable summarize(const CsvTable& replicates);

}  // namespace enda
