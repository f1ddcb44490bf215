#include "enda/config.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "enda/io.hpp"

namespace enda {

std::string to_string(Problem p) {
  switch (p) {
    case Problem::Cubic: return "cubic";
    case Problem::FiveParam: return "five-param";
    case Problem::KlField: return "kl-field";
  }
  return "?";
}

std::string to_string(Method m) {
  switch (m) {
    case Method::IS: return "IS";
    case Method::ETKF: return "ETKF";
    case Method::ETPF: return "ETPF";
    case Method::LETKF: return "LETKF";
    case Method::LETPF: return "LETPF";
  }
  return "?";
}

Problem problem_from_string(const std::string& s) {
  if (s == "cubic") return Problem::Cubic;
  if (s == "five-param") return Problem::FiveParam;
  if (s == "kl-field") return Problem::KlField;
  throw ConfigError("unknown problem '" + s + "' (cubic | five-param | kl-field)");
}

Method method_from_string(const std::string& s) {
  if (s == "IS") return Method::IS;
  if (s == "ETKF") return Method::ETKF;
  if (s == "ETPF") return Method::ETPF;
  if (s == "LETKF") return Method::LETKF;
  if (s == "LETPF") return Method::LETPF;
  throw ConfigError("unknown method '" + s + "' (IS | ETKF | ETPF | LETKF | LETPF)");
}

bool is_localized(Method m) { return m == Method::LETKF || m == Method::LETPF; }

namespace {

std::string trimmed(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<Eigen::Index> default_ensemble_sizes() {
  std::vector<Eigen::Index> sizes;
  for (Eigen::Index m = 10; m <= 1000; m += 50) sizes.push_back(m);
  return sizes;
}

long parse_long(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse integer '" + value + "'");
  }
}

double parse_real(const std::string& key, const std::string& value) {
  try {
    return parse_double(value);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse number '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("key '" + key + "': expected true or false, got '" + value + "'");
}

}  // namespace

std::string ExperimentConfig::schema() {
  return R"(problem                  cubic | five-param | kl-field            (required)
method                   IS | ETKF | ETPF | LETKF | LETPF         (required)
ensemble_sizes           comma list of ints    default 10,60,...,960
replicates               int >= 1              default 10
seed                     uint64                default 0
output_dir               path                  (required to run)
grid_n                   int >= 2              default 50, darcy problems only
truncation               int >= 1              kl-field only, default full
localization_radius      real > 0              required iff method is LETKF/LETPF
reference_archive        path                  optional, adds kl_* columns
histogram_bins           int >= 1              default 20
observation.sigma        real > 0              default 0.01, darcy problems only
observation.noise_std    real >= 0             default 0.09 (darcy), 4 (cubic)
observation.lattice      int >= 1              default 4, darcy problems only
prior.correlation_range  real > 0              default 0.5, kl-field only
prior.kl_cache           path                  optional basis snapshot, kl-field only
save_ensembles           true | false          default false)";
}

ExperimentConfig ExperimentConfig::parse_text(const std::string& text) {
  ExperimentConfig cfg;
  cfg.ensemble_sizes = default_ensemble_sizes();

  std::istringstream is(text);
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trimmed(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trimmed(line.substr(0, eq));
    const std::string value = trimmed(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("line " + std::to_string(line_no) + ": empty key or value");
    if (!cfg.keys_present.insert(key).second)
      throw ConfigError("duplicate key '" + key + "'");

    if (key == "problem") {
      cfg.problem = problem_from_string(value);
    } else if (key == "method") {
      cfg.method = method_from_string(value);
    } else if (key == "ensemble_sizes") {
      cfg.ensemble_sizes.clear();
      std::istringstream vs(value);
      std::string item;
      while (std::getline(vs, item, ',')) {
        item = trimmed(item);
        if (item.empty()) throw ConfigError("ensemble_sizes: empty entry");
        cfg.ensemble_sizes.push_back(parse_long(key, item));
      }
      if (cfg.ensemble_sizes.empty()) throw ConfigError("ensemble_sizes: empty list");
    } else if (key == "replicates") {
      cfg.replicates = static_cast<int>(parse_long(key, value));
    } else if (key == "seed") {
      try {
        cfg.seed = std::stoull(value);
      } catch (const std::exception&) {
        throw ConfigError("key 'seed': cannot parse '" + value + "'");
      }
    } else if (key == "output_dir") {
      cfg.output_dir = value;
    } else if (key == "grid_n") {
      cfg.grid_n = static_cast<int>(parse_long(key, value));
    } else if (key == "truncation") {
      cfg.truncation = parse_long(key, value);
    } else if (key == "localization_radius") {
      cfg.localization_radius = parse_real(key, value);
    } else if (key == "reference_archive") {
      cfg.reference_archive = value;
    } else if (key == "histogram_bins") {
      cfg.histogram_bins = static_cast<int>(parse_long(key, value));
    } else if (key == "observation.sigma") {
      cfg.obs_sigma = parse_real(key, value);
    } else if (key == "observation.noise_std") {
      cfg.obs_noise_std = parse_real(key, value);
    } else if (key == "observation.lattice") {
      cfg.obs_lattice = static_cast<int>(parse_long(key, value));
    } else if (key == "prior.correlation_range") {
      cfg.prior_correlation_range = parse_real(key, value);
    } else if (key == "prior.kl_cache") {
      cfg.kl_cache = value;
    } else if (key == "save_ensembles") {
      cfg.save_ensembles = parse_bool(key, value);
    } else {
      throw ConfigError("unknown key '" + key + "'");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buffer;
  buffer << is.rdbuf();
  return parse_text(buffer.str());
}

void ExperimentConfig::validate() const {
  const bool darcy = problem != Problem::Cubic;
  if (!keys_present.count("problem")) throw ConfigError("missing required key 'problem'");
  if (!keys_present.count("method")) throw ConfigError("missing required key 'method'");

  if (replicates < 1) throw ConfigError("replicates must be >= 1");
  if (histogram_bins < 1) throw ConfigError("histogram_bins must be >= 1");
  for (const Eigen::Index m : ensemble_sizes)
    if (m < 1) throw ConfigError("ensemble sizes must be positive");

  if (is_localized(method)) {
    if (!(localization_radius > 0.0))
      throw ConfigError("localization_radius is required for " + to_string(method));
    if (problem != Problem::KlField)
      throw ConfigError("localized methods need grid-indexed parameters (kl-field only)");
  } else if (keys_present.count("localization_radius")) {
    throw ConfigError("localization_radius is only valid for LETKF/LETPF");
  }

  if (truncation != 0) {
    if (problem != Problem::KlField) throw ConfigError("truncation is kl-field only");
    if (truncation < 1) throw ConfigError("truncation must be >= 1");
  }

  if (!darcy) {
    for (const char* key : {"grid_n", "observation.sigma", "observation.lattice",
                            "prior.correlation_range", "prior.kl_cache"})
      if (keys_present.count(key))
        throw ConfigError(std::string("key '") + key + "' does not apply to the cubic problem");
  } else {
    if (grid_n < 2) throw ConfigError("grid_n must be >= 2");
    if (!(obs_sigma > 0.0)) throw ConfigError("observation.sigma must be positive");
    if (obs_lattice < 1) throw ConfigError("observation.lattice must be >= 1");
  }
  if (problem != Problem::KlField &&
      (keys_present.count("prior.correlation_range") || keys_present.count("prior.kl_cache")))
    throw ConfigError("prior.* keys apply to the kl-field problem only");
  if (problem == Problem::KlField) {
    if (!(prior_correlation_range > 0.0))
      throw ConfigError("prior.correlation_range must be positive");
    if (truncation > static_cast<Eigen::Index>(grid_n) * grid_n)
      throw ConfigError("truncation exceeds the number of modes");
  }
  if (keys_present.count("observation.noise_std") && obs_noise_std < 0.0)
    throw ConfigError("observation.noise_std must be >= 0");
}

double ExperimentConfig::noise_std_or_default() const {
  if (obs_noise_std >= 0.0) return obs_noise_std;
  return problem == Problem::Cubic ? 4.0 : 0.09;
}

// output_dir and cache paths describe where results land, not what is
// computed, so they stay out of the canonical form (and the hash).
std::string ExperimentConfig::canonical_text() const {
  std::map<std::string, std::string> kv;
  kv["problem"] = to_string(problem);
  kv["method"] = to_string(method);
  {
    std::ostringstream os;
    for (std::size_t i = 0; i < ensemble_sizes.size(); ++i)
      os << (i ? "," : "") << ensemble_sizes[i];
    kv["ensemble_sizes"] = os.str();
  }
  kv["replicates"] = std::to_string(replicates);
  kv["seed"] = std::to_string(seed);
  kv["histogram_bins"] = std::to_string(histogram_bins);
  kv["observation.noise_std"] = format_double(noise_std_or_default());
  kv["reference_archive"] = reference_archive;
  kv["save_ensembles"] = save_ensembles ? "true" : "false";
  if (problem != Problem::Cubic) {
    kv["grid_n"] = std::to_string(grid_n);
    kv["observation.sigma"] = format_double(obs_sigma);
    kv["observation.lattice"] = std::to_string(obs_lattice);
  }
  if (problem == Problem::KlField) {
    kv["prior.correlation_range"] = format_double(prior_correlation_range);
    kv["truncation"] = std::to_string(truncation);
  }
  if (is_localized(method)) kv["localization_radius"] = format_double(localization_radius);

  std::ostringstream os;
  for (const auto& [key, value] : kv) os << key << " = " << value << '\n';
  return os.str();
}

std::uint64_t ExperimentConfig::config_hash() const {
  const std::string text = canonical_text();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const char ch : text) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace enda
