#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "enda/errors.hpp"

namespace enda {

enum class Problem { Cubic, FiveParam, KlField };
enum class Method { IS, ETKF, ETPF, LETKF, LETPF };

std::string to_string(Problem p);
std::string to_string(Method m);
Problem problem_from_string(const std::string& s);
Method method_from_string(const std::string& s);
bool is_localized(Method m);

// Declarative twin-experiment setup. Parsed from a key = value file with
// dotted keys for nesting; unknown keys are rejected. See
// ExperimentConfig::schema() for the full key list.
struct ExperimentConfig {
  Problem problem = Problem::Cubic;
  Method method = Method::IS;
  std::vector<Eigen::Index> ensemble_sizes;  // default 10, 60, ..., 960
  int replicates = 10;
  std::uint64_t seed = 0;
  std::string output_dir;

  int grid_n = 50;                   // darcy problems
  Eigen::Index truncation = 0;       // kl-field; 0 = full expansion
  double localization_radius = 0.0;  // required iff method is localized
  std::string reference_archive;     // optional, enables KL-divergence columns
  int histogram_bins = 20;

  double obs_sigma = 0.01;
  double obs_noise_std = -1.0;  // -1 = problem default (0.09 darcy, 4 cubic)
  int obs_lattice = 4;          // observations on an obs_lattice^2 interior grid

  double prior_correlation_range = 0.5;  // kl-field exponential covariance
  std::string kl_cache;                  // optional basis snapshot path
  bool save_ensembles = false;           // checkpoint prior/analysis snapshots

  std::set<std::string> keys_present;  // filled by the parser

  static ExperimentConfig parse_file(const std::string& path);
  static ExperimentConfig parse_text(const std::string& text);
  static std::string schema();

  void validate() const;
  double noise_std_or_default() const;

  // Every effective setting as sorted key = value lines; input for the config
  // hash and echoed into the run manifest.
  std::string canonical_text() const;
  std::uint64_t config_hash() const;  // FNV-1a over canonical_text()
};

}  // namespace enda
