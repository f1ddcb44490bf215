#include "enda/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "enda/etkf.hpp"
#include "enda/etpf.hpp"
#include "enda/io.hpp"
#include "enda/localization.hpp"
#include "enda/metrics.hpp"
#include "enda/parallel.hpp"
#include "enda/rng.hpp"
#include "enda/snapshot.hpp"
#include "enda/version.hpp"

namespace enda {

namespace fs = std::filesystem;

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> tracked_names_for(Problem p) {
  switch (p) {
    case Problem::Cubic: return {"u"};
    case Problem::FiveParam: return {"a", "b", "c", "log_k1", "log_k2"};
    case Problem::KlField: return {"z1", "z2", "z3"};
  }
  return {};
}

Eigen::VectorXd uniform_weights(Eigen::Index m) {
  return Eigen::VectorXd::Constant(m, 1.0 / static_cast<double>(m));
}

// log-permeability field of one five-param member, built directly in log space
Eigen::VectorXd layered_log_field(const LayeredParams& p, const GridSpec& g) {
  Eigen::VectorXd field(g.cell_count());
  for (Eigen::Index i = 0; i < g.cell_count(); ++i) {
    const Eigen::Vector2d x = g.center(i);
    double interface = p.a + (p.b - p.a) * x(0);
    if (x(0) >= 0.5) interface -= p.c;
    interface = std::clamp(interface, 0.0, 1.0);
    field(i) = (x(1) < interface) ? p.log_k1 : p.log_k2;
  }
  return field;
}

// mode ensemble -> log-perm field ensemble (full expansion), one batched GEMM
Eigen::MatrixXd mode_fields(const KLBasis& basis, const Eigen::MatrixXd& modes) {
  const Eigen::MatrixXd scaled_basis =
      basis.eigenvectors * basis.eigenvalues.cwiseSqrt().asDiagonal();
  Eigen::MatrixXd fields = modes * scaled_basis.transpose();
  fields.array() += basis.mean_log_k;
  return fields;
}

// field ensemble -> modes, same floor rule as logperm_to_modes
Eigen::MatrixXd fields_to_modes(const KLBasis& basis, const Eigen::MatrixXd& fields) {
  const double floor = 1e-12 * std::max(basis.eigenvalues(0), 0.0);
  Eigen::VectorXd inv_sqrt = Eigen::VectorXd::Zero(basis.dim());
  for (Eigen::Index i = 0; i < basis.dim(); ++i)
    if (basis.eigenvalues(i) > floor && basis.eigenvalues(i) > 0.0)
      inv_sqrt(i) = 1.0 / std::sqrt(basis.eigenvalues(i));
  const Eigen::MatrixXd centered = fields.array() - basis.mean_log_k;
  return (centered * basis.eigenvectors) * inv_sqrt.asDiagonal();
}

struct FieldMetrics {
  double rmse = kNan;
  double variance = kNan;
};

// weighted log-perm statistics for the five-param problem (streamed, no
// member-field storage)
FieldMetrics five_param_field_metrics(const Eigen::MatrixXd& raw_params,
                                      const Eigen::VectorXd& weights,
                                      const GridSpec& g,
                                      const Eigen::VectorXd& truth_logperm) {
  const Eigen::Index m = raw_params.rows();
  Eigen::VectorXd mean_field = Eigen::VectorXd::Zero(g.cell_count());
  double mean_sq = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    LayeredParams p;
    p.a = raw_params(i, 0);
    p.b = raw_params(i, 1);
    p.c = raw_params(i, 2);
    p.log_k1 = raw_params(i, 3);
    p.log_k2 = raw_params(i, 4);
    const Eigen::VectorXd field = layered_log_field(p, g);
    mean_field += weights(i) * field;
    mean_sq += weights(i) * field.squaredNorm();
  }
  FieldMetrics out;
  out.rmse = rmse_logperm(mean_field, truth_logperm);
  if (m >= 2)
    out.variance = std::max(0.0, mean_sq - mean_field.squaredNorm()) *
                   static_cast<double>(m) / static_cast<double>(m - 1);
  return out;
}

// weighted log-perm statistics for the kl-field problem, computed in mode
// space: with orthonormal eigenvectors, |B (z - z_mean)|^2 = sum lambda_i dz_i^2
FieldMetrics kl_field_metrics(const Eigen::MatrixXd& modes, const Eigen::VectorXd& weights,
                              const KLBasis& basis, Eigen::Index truncation,
                              const Eigen::VectorXd& truth_logperm) {
  const Eigen::Index m = modes.rows();
  const Eigen::Index trunc = truncation > 0 ? truncation : basis.dim();
  const Eigen::VectorXd mean_modes = modes.transpose() * weights;

  FieldMetrics out;
  out.rmse = rmse_logperm(kl_to_logperm(mean_modes, basis, trunc), truth_logperm);
  if (m >= 2) {
    const Eigen::VectorXd second_moment =
        modes.array().square().matrix().transpose() * weights;
    const Eigen::VectorXd mode_var =
        (second_moment - mean_modes.cwiseAbs2()).cwiseMax(0.0);
    out.variance = basis.eigenvalues.head(trunc).dot(mode_var.head(trunc)) *
                   static_cast<double>(m) / static_cast<double>(m - 1);
  }
  return out;
}

std::string sanitized_error(const std::string& message) {
  std::string out = message;
  for (char& ch : out)
    if (ch == ',' || ch == '\n' || ch == '\r') ch = ';';
  return out;
}

std::string field_or_empty(double value) {
  return std::isfinite(value) ? format_double(value) : std::string{};
}

}  // namespace

ProblemSetup build_problem(const ExperimentConfig& cfg) {
  ProblemSetup setup;
  setup.problem = cfg.problem;
  setup.tracked_names = tracked_names_for(cfg.problem);
  setup.truth_seed = derive_seed(cfg.seed, {kTruthStream});
  setup.noise_seed = derive_seed(cfg.seed, {kNoiseStream});

  if (cfg.problem == Problem::Cubic) {
    setup.truth_params = Eigen::VectorXd::Constant(1, 6.0);
    const double noise_std = cfg.noise_std_or_default();
    Rng rng(setup.noise_seed);
    ObservationSet obs;
    obs.y_obs = Eigen::VectorXd::Constant(1, cubic_forward(6.0) + noise_std * rng.normal());
    obs.noise_cov = Eigen::MatrixXd::Constant(
        1, 1, noise_std > 0.0 ? noise_std * noise_std : 1.0);
    obs.locations.resize(0, 2);
    setup.observations = std::move(obs);
    return setup;
  }

  setup.grid = GridSpec::unit(cfg.grid_n);
  setup.obs_spec.sigma = cfg.obs_sigma;
  setup.obs_spec.noise_std = cfg.noise_std_or_default();
  setup.obs_spec.locations = lattice_observation_locations(cfg.obs_lattice);
  setup.obs_matrix = observation_matrix(setup.grid, setup.obs_spec);

  if (cfg.problem == Problem::FiveParam) {
    const LayeredParams truth = layered_truth();
    setup.truth_params.resize(5);
    setup.truth_params << truth.a, truth.b, truth.c, truth.log_k1, truth.log_k2;
    setup.truth_k = layered_permeability(truth, setup.grid);
    setup.truth_logperm = setup.truth_k.k.array().log();
  } else {
    if (!cfg.kl_cache.empty() && fs::exists(cfg.kl_cache)) {
      setup.basis = load_kl_basis(cfg.kl_cache);
      if (setup.basis.dim() != setup.grid.cell_count())
        throw ConfigError("prior.kl_cache does not match grid_n");
    } else {
      setup.basis = kl_basis(exp_covariance(setup.grid, cfg.prior_correlation_range));
      if (!cfg.kl_cache.empty()) {
        if (const fs::path parent = fs::path(cfg.kl_cache).parent_path(); !parent.empty())
          fs::create_directories(parent);
        save_kl_basis(cfg.kl_cache, setup.basis);
      }
    }
    Rng rng(setup.truth_seed);
    Eigen::VectorXd truth_modes(setup.basis.dim());
    for (Eigen::Index i = 0; i < truth_modes.size(); ++i) truth_modes(i) = rng.normal();
    setup.truth_params = truth_modes;
    setup.truth_logperm = kl_to_logperm(truth_modes, setup.basis, setup.basis.dim());
    setup.truth_k.k = setup.truth_logperm.array().exp();
  }

  setup.observations =
      synthesize_observations(setup.truth_k, setup.grid, setup.obs_spec, setup.noise_seed);
  return setup;
}

Ensemble draw_prior(const ProblemSetup& setup, const ExperimentConfig& cfg,
                    Eigen::Index ensemble_size, int replicate) {
  const std::uint64_t prior_seed =
      derive_seed(cfg.seed, {kPriorStream, static_cast<std::uint64_t>(ensemble_size),
                             static_cast<std::uint64_t>(replicate)});
  switch (setup.problem) {
    case Problem::Cubic: {
      Rng rng(prior_seed);
      Ensemble e;
      e.members.resize(ensemble_size, 1);
      for (Eigen::Index m = 0; m < ensemble_size; ++m)
        e.members(m, 0) = 4.0 + rng.normal();
      return e;
    }
    case Problem::FiveParam:
      return sample_five_param_prior(prior_seed, ensemble_size);
    case Problem::KlField:
      return sample_grf_prior(setup.basis, prior_seed, ensemble_size);
  }
  throw ConfigError("unknown problem");
}

PredictedData forward_map(const ProblemSetup& setup, const Ensemble& e) {
  PredictedData y;
  if (setup.problem == Problem::Cubic) {
    y.values.resize(e.member_count(), 1);
    for (Eigen::Index m = 0; m < e.member_count(); ++m)
      y.values(m, 0) = cubic_forward(e.members(m, 0));
    return y;
  }

  y.values.resize(e.member_count(), setup.obs_matrix.rows());
  if (setup.problem == Problem::FiveParam) {
    parallel_for(static_cast<std::size_t>(e.member_count()), [&](std::size_t m) {
      const LayeredParams p =
          LayeredParams::from_transformed(e.members.row(static_cast<Eigen::Index>(m)));
      const PressureField pressure =
          solve_pressure(layered_permeability(p, setup.grid), setup.grid);
      y.values.row(static_cast<Eigen::Index>(m)) =
          (setup.obs_matrix * pressure.p).transpose();
    });
  } else {
    const Eigen::MatrixXd fields = mode_fields(setup.basis, e.members);
    parallel_for(static_cast<std::size_t>(e.member_count()), [&](std::size_t m) {
      PermeabilityField k;
      k.k = fields.row(static_cast<Eigen::Index>(m)).array().exp();
      const PressureField pressure = solve_pressure(k, setup.grid);
      y.values.row(static_cast<Eigen::Index>(m)) =
          (setup.obs_matrix * pressure.p).transpose();
    });
  }
  return y;
}

Eigen::MatrixXd tracked_parameters(const ProblemSetup& setup, const Ensemble& e) {
  switch (setup.problem) {
    case Problem::Cubic:
      return e.members;
    case Problem::FiveParam: {
      Eigen::MatrixXd raw(e.member_count(), 5);
      for (Eigen::Index m = 0; m < e.member_count(); ++m) {
        const LayeredParams p = LayeredParams::from_transformed(e.members.row(m));
        raw.row(m) << p.a, p.b, p.c, p.log_k1, p.log_k2;
      }
      return raw;
    }
    case Problem::KlField:
      return e.members.leftCols(std::min<Eigen::Index>(3, e.dim()));
  }
  throw ConfigError("unknown problem");
}

namespace {

struct Analysis {
  Ensemble ensemble;
  Eigen::VectorXd weights;  // analysis weights (non-uniform only for IS)
};

Analysis apply_method(const ExperimentConfig& cfg, const ProblemSetup& setup,
                      const Ensemble& prior, const PredictedData& predicted) {
  Analysis a;
  switch (cfg.method) {
    case Method::IS: {
      a.ensemble = prior;
      a.weights = likelihood_weights(predicted, setup.observations).values;
      return a;
    }
    case Method::ETKF: {
      const Eigen::VectorXd y_mean = predicted.values.colwise().mean();
      const EtkfTransform t = etkf_transform(predicted_anomalies(predicted),
                                             setup.observations, y_mean);
      a.ensemble = etkf_update(prior, t);
      a.weights = uniform_weights(prior.member_count());
      return a;
    }
    case Method::ETPF: {
      const Weights w = likelihood_weights(predicted, setup.observations);
      a.ensemble = etpf_update(prior, w);
      a.weights = uniform_weights(prior.member_count());
      return a;
    }
    case Method::LETKF:
    case Method::LETPF: {
      if (setup.problem != Problem::KlField)
        throw PreconditionError("localized methods need grid-indexed parameters");
      Ensemble fields;
      fields.members = mode_fields(setup.basis, prior.members);
      const LocalizationConfig loc{cfg.localization_radius};
      Ensemble analysis_fields;
      if (cfg.method == Method::LETKF) {
        const Eigen::VectorXd y_mean = predicted.values.colwise().mean();
        analysis_fields = letkf_update(fields, predicted_anomalies(predicted),
                                       setup.observations, y_mean, setup.grid, loc);
      } else {
        analysis_fields =
            letpf_update(fields, predicted, setup.observations, setup.grid, loc);
      }
      a.ensemble.members = fields_to_modes(setup.basis, analysis_fields.members);
      a.weights = uniform_weights(prior.member_count());
      return a;
    }
  }
  throw ConfigError("unknown method");
}

ReplicateResult compute_replicate(const ExperimentConfig& cfg, const ProblemSetup& setup,
                                  Eigen::Index ensemble_size, int replicate,
                                  const ReferenceArchive* reference,
                                  Eigen::MatrixXd* exported_samples,
                                  Eigen::VectorXd* exported_weights) {
  ReplicateResult row;
  row.method = to_string(cfg.method);
  row.ensemble_size = ensemble_size;
  row.replicate = replicate;

  const auto t0 = std::chrono::steady_clock::now();
  try {
    const Ensemble prior = draw_prior(setup, cfg, ensemble_size, replicate);
    const PredictedData predicted_b = forward_map(setup, prior);
    const Eigen::VectorXd w_b = uniform_weights(ensemble_size);

    row.misfit_before =
        data_misfit(predicted_b.values.colwise().mean(), setup.observations);

    const Eigen::MatrixXd raw_b = tracked_parameters(setup, prior);
    switch (setup.problem) {
      case Problem::Cubic:
        row.rmse_before = std::abs(raw_b.col(0).mean() - setup.truth_params(0));
        break;
      case Problem::FiveParam: {
        row.rmse_before =
            five_param_field_metrics(raw_b, w_b, setup.grid, setup.truth_logperm).rmse;
        row.relative_error_before =
            relative_error_5param(raw_b.colwise().mean(), setup.truth_params);
        break;
      }
      case Problem::KlField:
        row.rmse_before = kl_field_metrics(prior.members, w_b, setup.basis,
                                           cfg.truncation, setup.truth_logperm)
                              .rmse;
        break;
    }

    const Analysis analysis = apply_method(cfg, setup, prior, predicted_b);
    // IS keeps the parameters, so the background predictions are reused
    const PredictedData predicted_a = (cfg.method == Method::IS)
                                          ? predicted_b
                                          : forward_map(setup, analysis.ensemble);

    row.misfit_after = data_misfit(predicted_a.values.transpose() * analysis.weights,
                                   setup.observations);

    const Eigen::MatrixXd raw_a = tracked_parameters(setup, analysis.ensemble);
    const Eigen::VectorXd raw_mean_a = raw_a.transpose() * analysis.weights;
    switch (setup.problem) {
      case Problem::Cubic: {
        row.rmse_after = std::abs(raw_mean_a(0) - setup.truth_params(0));
        if (ensemble_size >= 2) {
          const double second =
              raw_a.col(0).cwiseAbs2().dot(analysis.weights);
          row.variance_after = std::max(0.0, second - raw_mean_a(0) * raw_mean_a(0)) *
                               static_cast<double>(ensemble_size) /
                               static_cast<double>(ensemble_size - 1);
        }
        break;
      }
      case Problem::FiveParam: {
        const FieldMetrics metrics = five_param_field_metrics(
            raw_a, analysis.weights, setup.grid, setup.truth_logperm);
        row.rmse_after = metrics.rmse;
        row.variance_after = metrics.variance;
        row.relative_error_after = relative_error_5param(raw_mean_a, setup.truth_params);
        break;
      }
      case Problem::KlField: {
        const FieldMetrics metrics =
            kl_field_metrics(analysis.ensemble.members, analysis.weights, setup.basis,
                             cfg.truncation, setup.truth_logperm);
        row.rmse_after = metrics.rmse;
        row.variance_after = metrics.variance;
        const Eigen::VectorXd mean_modes =
            analysis.ensemble.members.transpose() * analysis.weights;
        for (int i = 0; i < 3 && i < mean_modes.size(); ++i) {
          const double diff = mean_modes(i) - setup.truth_params(i);
          row.mode_sq_error(i) = diff * diff;
        }
        break;
      }
    }

    if (reference != nullptr) {
      row.kl_divergences.resize(setup.tracked_names.size(), kNan);
      for (std::size_t p = 0; p < setup.tracked_names.size(); ++p) {
        row.kl_divergences[p] = kl_divergence_hist(
            reference->samples.col(static_cast<Eigen::Index>(p)), reference->weights,
            raw_a.col(static_cast<Eigen::Index>(p)), analysis.weights,
            cfg.histogram_bins);
      }
    }

    if (exported_samples != nullptr) {
      *exported_samples = raw_a;
      *exported_weights = analysis.weights;
    }

    if (cfg.save_ensembles) {
      const fs::path dir = fs::path(cfg.output_dir) / "ensembles";
      fs::create_directories(dir);
      const std::string tag =
          "M" + std::to_string(ensemble_size) + "_r" + std::to_string(replicate);
      write_ensemble_snapshot((dir / ("prior_" + tag + ".snap")).string(), prior);
      write_ensemble_snapshot((dir / ("analysis_" + tag + ".snap")).string(),
                              analysis.ensemble);
    }
  } catch (const std::exception& err) {
    row.ok = false;
    row.error = sanitized_error(err.what());
  }
  row.wall_time =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

}  // namespace

// ----------------------------------------------------------------- tables ----

std::optional<std::size_t> CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  return std::nullopt;
}

CsvTable read_csv_table(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open '" + path + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(is, line)) throw IoError("empty csv '" + path + "'");
  table.columns = split_csv_line(line);
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto fields = split_csv_line(line);
    if (fields.size() != table.columns.size())
      throw IoError("ragged csv row in '" + path + "'");
    table.rows.push_back(std::move(fields));
  }
  return table;
}

std::string csv_to_string(const CsvTable& table) {
  std::ostringstream os;
  for (std::size_t i = 0; i < table.columns.size(); ++i)
    os << (i ? "," : "") << table.columns[i];
  os << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << '\n';
  }
  return os.str();
}

void write_csv_table(const std::string& path, const CsvTable& table) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path + "' for writing");
  os << csv_to_string(table);
  if (!os) throw IoError("write failed for '" + path + "'");
}

CsvTable replicates_to_table(const ExperimentConfig& cfg,
                             const std::vector<ReplicateResult>& results,
                             const std::vector<std::string>& tracked_names) {
  CsvTable table;
  table.columns = {"method", "M",           "replicate",  "status",
                   "misfit_before", "misfit_after", "rmse_before", "rmse_after",
                   "variance_after"};
  if (cfg.problem == Problem::FiveParam) {
    table.columns.push_back("relative_error_before");
    table.columns.push_back("relative_error_after");
  }
  if (cfg.problem == Problem::KlField) {
    table.columns.push_back("z1_sq_error");
    table.columns.push_back("z2_sq_error");
    table.columns.push_back("z3_sq_error");
  }
  const bool with_kl = !cfg.reference_archive.empty();
  if (with_kl)
    for (const std::string& name : tracked_names)
      table.columns.push_back("kl_" + name);
  table.columns.push_back("wall_time");

  for (const ReplicateResult& r : results) {
    std::vector<std::string> row;
    row.push_back(r.method);
    row.push_back(std::to_string(r.ensemble_size));
    row.push_back(std::to_string(r.replicate));
    row.push_back(r.ok ? "ok" : "error: " + r.error);
    row.push_back(field_or_empty(r.misfit_before));
    row.push_back(field_or_empty(r.misfit_after));
    row.push_back(field_or_empty(r.rmse_before));
    row.push_back(field_or_empty(r.rmse_after));
    row.push_back(field_or_empty(r.variance_after));
    if (cfg.problem == Problem::FiveParam) {
      row.push_back(field_or_empty(r.relative_error_before));
      row.push_back(field_or_empty(r.relative_error_after));
    }
    if (cfg.problem == Problem::KlField)
      for (int i = 0; i < 3; ++i) row.push_back(field_or_empty(r.mode_sq_error(i)));
    if (with_kl)
      for (std::size_t p = 0; p < tracked_names.size(); ++p)
        row.push_back(p < r.kl_divergences.size() ? field_or_empty(r.kl_divergences[p])
                                                  : std::string{});
    row.push_back(format_double(r.wall_time));
    table.rows.push_back(std::move(row));
  }
  return table;
}

CsvTable summarize(const CsvTable& replicates) {
  const auto method_col = replicates.column_index("method");
  const auto m_col = replicates.column_index("M");
  const auto status_col = replicates.column_index("status");
  if (!method_col || !m_col || !status_col)
    throw IoError("summarize: table lacks method/M/status columns");

  std::vector<std::size_t> metric_cols;
  for (std::size_t c = 0; c < replicates.columns.size(); ++c) {
    const std::string& name = replicates.columns[c];
    if (name == "method" || name == "M" || name == "replicate" || name == "status" ||
        name == "wall_time")
      continue;
    metric_cols.push_back(c);
  }
  const auto rmse_before_col = replicates.column_index("rmse_before");
  const auto rmse_after_col = replicates.column_index("rmse_after");
  const auto misfit_before_col = replicates.column_index("misfit_before");
  const auto misfit_after_col = replicates.column_index("misfit_after");

  // group rows by (method, M) in first-seen order
  std::vector<std::pair<std::string, std::string>> keys;
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> groups;
  for (std::size_t r = 0; r < replicates.rows.size(); ++r) {
    const auto key = std::make_pair(replicates.rows[r][*method_col],
                                    replicates.rows[r][*m_col]);
    auto [it, inserted] = groups.try_emplace(key);
    if (inserted) keys.push_back(key);
    it->second.push_back(r);
  }

  CsvTable summary;
  summary.columns = {"method", "M", "replicates", "errors"};
  for (const std::size_t c : metric_cols) {
    const std::string& name = replicates.columns[c];
    summary.columns.push_back(name + "_mean");
    summary.columns.push_back(name + "_min");
    summary.columns.push_back(name + "_max");
  }
  for (const char* name : {"misfit_delta", "rmse_delta"}) {
    summary.columns.push_back(std::string(name) + "_mean");
    summary.columns.push_back(std::string(name) + "_min");
    summary.columns.push_back(std::string(name) + "_max");
  }
  summary.columns.push_back("pct_rmse_increase");

  const auto stats_fields = [](const std::vector<double>& values) {
    std::vector<std::string> out(3);
    if (values.empty()) return out;
    double sum = 0.0, lo = values.front(), hi = values.front();
    for (const double v : values) {
      sum += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    out[0] = format_double(sum / static_cast<double>(values.size()));
    out[1] = format_double(lo);
    out[2] = format_double(hi);
    return out;
  };

  for (const auto& key : keys) {
    const auto& rows = groups[key];
    std::vector<std::string> out = {key.first, key.second};
    std::size_t ok_count = 0, error_count = 0;
    for (const std::size_t r : rows)
      (replicates.rows[r][*status_col] == "ok" ? ok_count : error_count)++;
    out.push_back(std::to_string(rows.size()));
    out.push_back(std::to_string(error_count));

    const auto collect = [&](std::size_t col) {
      std::vector<double> values;
      for (const std::size_t r : rows) {
        if (replicates.rows[r][*status_col] != "ok") continue;
        const std::string& cell = replicates.rows[r][col];
        if (!cell.empty()) values.push_back(parse_double(cell));
      }
      return values;
    };
    const auto collect_delta = [&](std::optional<std::size_t> after,
                                   std::optional<std::size_t> before) {
      std::vector<double> values;
      if (!after || !before) return values;
      for (const std::size_t r : rows) {
        if (replicates.rows[r][*status_col] != "ok") continue;
        const std::string& a = replicates.rows[r][*after];
        const std::string& b = replicates.rows[r][*before];
        if (!a.empty() && !b.empty())
          values.push_back(parse_double(a) - parse_double(b));
      }
      return values;
    };

    for (const std::size_t c : metric_cols)
      for (auto& field : stats_fields(collect(c))) out.push_back(std::move(field));
    for (auto& field : stats_fields(collect_delta(misfit_after_col, misfit_before_col)))
      out.push_back(std::move(field));
    const std::vector<double> rmse_delta = collect_delta(rmse_after_col, rmse_before_col);
    for (auto& field : stats_fields(rmse_delta)) out.push_back(std::move(field));
    if (rmse_delta.empty()) {
      out.emplace_back();
    } else {
      const auto increased = static_cast<double>(
          std::count_if(rmse_delta.begin(), rmse_delta.end(), [](double d) { return d > 0.0; }));
      out.push_back(format_double(100.0 * increased / static_cast<double>(rmse_delta.size())));
    }
    summary.rows.push_back(std::move(out));
  }
  return summary;
}

// -------------------------------------------------------------- archives ----

void ReferenceArchive::save(const std::string& dir) const {
  fs::create_directories(dir);
  {
    std::ofstream os(fs::path(dir) / "archive-manifest", std::ios::trunc);
    if (!os) throw IoError("cannot write archive manifest in '" + dir + "'");
    os << "problem = " << to_string(problem) << '\n';
    os << "size = " << samples.rows() << '\n';
    os << "params = ";
    for (std::size_t i = 0; i < param_names.size(); ++i)
      os << (i ? "," : "") << param_names[i];
    os << '\n';
  }
  Snapshot snap;
  snap.set("samples", samples);
  snap.set("weights", weights);
  snap.save((fs::path(dir) / "samples.snap").string());
}

ReferenceArchive ReferenceArchive::load(const std::string& dir) {
  std::ifstream is(fs::path(dir) / "archive-manifest");
  if (!is) throw IoError("missing archive-manifest in '" + dir + "'");
  ReferenceArchive archive;
  std::string line;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, line.find_last_not_of(" \t", eq - 1) + 1);
    std::string value = line.substr(eq + 1);
    const auto begin = value.find_first_not_of(" \t");
    value = begin == std::string::npos ? "" : value.substr(begin);
    if (key == "problem") {
      archive.problem = problem_from_string(value);
    } else if (key == "params") {
      std::istringstream vs(value);
      std::string item;
      while (std::getline(vs, item, ',')) archive.param_names.push_back(item);
    }
  }
  const Snapshot snap = Snapshot::load((fs::path(dir) / "samples.snap").string());
  archive.samples = snap.get("samples");
  archive.weights = snap.get("weights");
  if (archive.weights.size() != archive.samples.rows())
    throw IoError("reference archive: weight/sample mismatch");
  if (archive.param_names.size() != static_cast<std::size_t>(archive.samples.cols()))
    throw IoError("reference archive: parameter name mismatch");
  return archive;
}

// ------------------------------------------------------------------ runs ----

namespace {

void write_histograms(const std::string& dir, const std::vector<std::string>& names,
                      const Eigen::MatrixXd& samples, const Eigen::VectorXd& weights,
                      int bins) {
  for (std::size_t p = 0; p < names.size(); ++p) {
    const Eigen::VectorXd column = samples.col(static_cast<Eigen::Index>(p));
    const double lo = column.minCoeff();
    const double hi = column.maxCoeff();
    if (!(hi > lo)) continue;  // degenerate sample range, nothing to plot
    const Histogram h = weighted_histogram(column, weights, bins, lo, hi);
    CsvTable table;
    table.columns = {"bin_left", "bin_right", "density"};
    for (int b = 0; b < bins; ++b)
      table.rows.push_back({format_double(h.edges(b)), format_double(h.edges(b + 1)),
                            format_double(h.density(b))});
    write_csv_table((fs::path(dir) / ("pdf_" + names[p] + ".csv")).string(), table);
  }
}

void write_manifest(const ExperimentConfig& cfg, const ProblemSetup& setup) {
  std::ofstream os(fs::path(cfg.output_dir) / "run-manifest", std::ios::trunc);
  if (!os) throw IoError("cannot write run-manifest");
  std::ostringstream hash;
  hash << std::hex << cfg.config_hash();
  os << "library_version = " << kVersion << '\n';
  os << "config_hash = 0x" << hash.str() << '\n';
  os << "seed = " << cfg.seed << '\n';
  os << "truth_seed = " << setup.truth_seed << '\n';
  os << "noise_seed = " << setup.noise_seed << '\n';
  os << '\n' << cfg.canonical_text();
}

}  // namespace

std::vector<ReplicateResult> run_twin(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("output_dir is required to run");
  fs::create_directories(cfg.output_dir);

  const ProblemSetup setup = build_problem(cfg);

  ReferenceArchive reference;
  const ReferenceArchive* reference_ptr = nullptr;
  if (!cfg.reference_archive.empty()) {
    reference = ReferenceArchive::load(cfg.reference_archive);
    if (reference.problem != cfg.problem)
      throw ConfigError("reference archive was built for a different problem");
    reference_ptr = &reference;
  }

  const Eigen::Index largest =
      *std::max_element(cfg.ensemble_sizes.begin(), cfg.ensemble_sizes.end());

  std::vector<ReplicateResult> results;
  Eigen::MatrixXd exported_samples;
  Eigen::VectorXd exported_weights;
  bool have_export = false;
  for (const Eigen::Index m : cfg.ensemble_sizes) {
    for (int r = 0; r < cfg.replicates; ++r) {
      const bool want_export = (m == largest && r == 0);
      Eigen::MatrixXd samples;
      Eigen::VectorXd weights;
      results.push_back(compute_replicate(cfg, setup, m, r, reference_ptr,
                                          want_export ? &samples : nullptr,
                                          want_export ? &weights : nullptr));
      if (want_export && results.back().ok) {
        exported_samples = std::move(samples);
        exported_weights = std::move(weights);
        have_export = true;
      }
    }
  }

  const CsvTable table = replicates_to_table(cfg, results, setup.tracked_names);
  write_csv_table((fs::path(cfg.output_dir) / "replicates.csv").string(), table);
  write_csv_table((fs::path(cfg.output_dir) / "summary.csv").string(), summarize(table));
  if (have_export)
    write_histograms(cfg.output_dir, setup.tracked_names, exported_samples,
                     exported_weights, cfg.histogram_bins);
  write_manifest(cfg, setup);
  return results;
}

ReferenceArchive run_reference_is(const ExperimentConfig& cfg, Eigen::Index reference_size) {
  cfg.validate();
  if (cfg.output_dir.empty()) throw ConfigError("output_dir is required to run");
  if (reference_size < 2) throw ConfigError("reference ensemble must have at least 2 members");
  fs::create_directories(cfg.output_dir);

  const ProblemSetup setup = build_problem(cfg);
  const Ensemble prior = draw_prior(setup, cfg, reference_size, 0);
  const PredictedData predicted = forward_map(setup, prior);
  const Weights w = likelihood_weights(predicted, setup.observations);

  ReferenceArchive archive;
  archive.problem = cfg.problem;
  archive.param_names = setup.tracked_names;
  archive.samples = tracked_parameters(setup, prior);
  archive.weights = w.values;
  archive.save(cfg.output_dir);
  write_histograms(cfg.output_dir, archive.param_names, archive.samples, archive.weights,
                   cfg.histogram_bins);
  write_manifest(cfg, setup);
  return archive;
}

LocalizationSweep sweep_localization(const ExperimentConfig& cfg,
                                     const std::vector<double>& radii) {
  if (!is_localized(cfg.method))
    throw ConfigError("sweep-loc requires a localized method (LETKF or LETPF)");
  if (radii.empty()) throw ConfigError("sweep-loc: empty radius list");

  LocalizationSweep sweep;
  double best = std::numeric_limits<double>::infinity();
  for (const double radius : radii) {
    if (!(radius > 0.0)) throw ConfigError("sweep-loc: radii must be positive");
    ExperimentConfig run_cfg = cfg;
    run_cfg.localization_radius = radius;
    run_cfg.keys_present.insert("localization_radius");
    std::ostringstream tag;
    tag << "radius_" << format_double(radius);
    run_cfg.output_dir = (fs::path(cfg.output_dir) / tag.str()).string();
    const std::vector<ReplicateResult> results = run_twin(run_cfg);

    double sum = 0.0;
    std::size_t count = 0;
    for (const ReplicateResult& r : results) {
      if (!r.ok || !std::isfinite(r.rmse_after)) continue;
      sum += r.rmse_after;
      ++count;
    }
    const double mean = count ? sum / static_cast<double>(count)
                              : std::numeric_limits<double>::infinity();
    sweep.radii.push_back(radius);
    sweep.mean_rmse_after.push_back(mean);
    if (mean < best) {
      best = mean;
      sweep.best_radius = radius;
    }
  }

  fs::create_directories(cfg.output_dir);
  CsvTable table;
  table.columns = {"radius", "mean_rmse_after"};
  for (std::size_t i = 0; i < sweep.radii.size(); ++i)
    table.rows.push_back(
        {format_double(sweep.radii[i]), format_double(sweep.mean_rmse_after[i])});
  write_csv_table((fs::path(cfg.output_dir) / "sweep.csv").string(), table);
  return sweep;
}

}  // namespace enda
