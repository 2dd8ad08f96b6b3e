#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "metasrm/meta_learners.hpp"

namespace metasrm {

// Configuration problems exit the CLI with code 2; runtime numeric problems
// with code 3.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One `key = value` per line; '#' starts a comment. Vectors are
// comma-separated scalars, matrices semicolon-separated rows.
using KeyValues = std::vector<std::pair<std::string, std::string>>;

KeyValues parse_config_text(const std::string& text);
KeyValues parse_config_file(const std::string& path);

// Later occurrences of a key override earlier ones (CLI overrides).
void apply_overrides(KeyValues& base, const KeyValues& overrides);

struct AgentSpec {
  enum class Kind { OracleTs, AgnosticTs, BMetaSrm, MisBMetaSrm, FMetaSrm };
  Kind kind = Kind::OracleTs;
  std::string tag;  // unique row label, e.g. "f-metasrm[m0=10]"
  PolicyKind policy = PolicyKind::thompson();
  int m0 = 0;  // FMetaSrm
  int t0 = 5;  // FMetaSrm, Bernoulli
  FMode mode = FMode::Commit;
  double mis_offset_range = 50.0;
};

struct ExperimentConfig {
  enum class Family { GaussianMab, LinearGaussian, Bernoulli };
  enum class Setting { Bayesian, Frequentist };

  Family family = Family::GaussianMab;
  int K = 1;
  int d = 1;
  int m = 1;
  int n = 1;
  int R = 1;
  std::uint64_t seed = 0;
  Setting setting = Setting::Bayesian;
  double sigma = 1.0;

  VectorXd psi_q;      // meta-prior mean (zeros unless given)
  MatrixXd Sigma_q;    // meta-prior covariance
  MatrixXd Sigma0;     // task-prior covariance
  VectorXd theta_star;  // frequentist setting only

  std::vector<std::pair<double, double>> beta_prior;  // Bernoulli family

  std::vector<AgentSpec> agents;
  bool resample_arms = true;  // linear family: new arm set per replication
  int workers = 0;            // 0: METASRM_WORKERS env var, then hardware
  std::string out = "results.csv";
};

// Parses, fills defaults, expands the f-metasrm m0 grid into one agent per
// value, and validates. Throws ConfigError with precise messages.
ExperimentConfig build_config(const KeyValues& kv);

struct Preset {
  std::string name;
  std::string description;
  std::string text;  // config in the key = value format
};

const std::vector<Preset>& presets();
const Preset& find_preset(const std::string& name);

}  // namespace metasrm
