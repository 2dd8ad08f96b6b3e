#include "metasrm/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

namespace metasrm {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "': expected a number, got '" +
                      value + "'");
  }
}

long long parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "': expected an integer, got '" +
                      value + "'");
  }
}

std::uint64_t parse_u64(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const unsigned long long v = std::stoull(value, &pos);
    if (pos != value.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key +
                      "': expected a non-negative integer, got '" + value +
                      "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError("config: key '" + key + "': expected true/false, got '" +
                    value + "'");
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::stringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.push_back("");
  return out;
}

VectorXd parse_vector(const std::string& key, const std::string& value) {
  const auto parts = split(value, ',');
  VectorXd v(Eigen::Index(parts.size()));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    v[Eigen::Index(i)] = parse_double(key, parts[i]);
  }
  return v;
}

MatrixXd parse_matrix(const std::string& key, const std::string& value) {
  const auto rows = split(value, ';');
  if (rows.empty()) throw ConfigError("config: key '" + key + "': empty matrix");
  std::vector<VectorXd> parsed;
  for (const auto& r : rows) parsed.push_back(parse_vector(key, r));
  const Eigen::Index cols = parsed[0].size();
  MatrixXd m(Eigen::Index(parsed.size()), cols);
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].size() != cols) {
      throw ConfigError("config: key '" + key +
                        "': matrix rows have inconsistent lengths");
    }
    m.row(Eigen::Index(i)) = parsed[i].transpose();
  }
  return m;
}

std::vector<int> parse_int_list(const std::string& key,
                                const std::string& value) {
  std::vector<int> out;
  for (const auto& p : split(value, ',')) {
    out.push_back(int(parse_int(key, p)));
  }
  return out;
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys = {
      "family", "K", "d", "m", "n", "R", "seed", "setting", "sigma",
      "sigma_q", "Sigma_q", "sigma0", "Sigma0", "psi_q", "theta_star",
      "alpha_star", "beta_star", "agents", "policy", "delta", "m0_grid",
      "t0", "mode", "mis_offset_range", "resample_arms", "workers", "out"};
  return keys;
}

std::vector<int> default_m0_grid(int m) {
  static const int pattern[] = {1, 2, 5};
  std::vector<int> grid;
  for (int scale = 1; scale <= m; scale *= 10) {
    for (int p : pattern) {
      const long long v = (long long)p * scale;
      if (v <= m) grid.push_back(int(v));
    }
  }
  if (grid.empty() || grid.back() != m) grid.push_back(m);
  return grid;
}

}  // namespace

KeyValues parse_config_text(const std::string& text) {
  KeyValues kv;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value', got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": empty key");
    }
    kv.emplace_back(key, value);
  }
  return kv;
}

KeyValues parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot open file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

void apply_overrides(KeyValues& base, const KeyValues& overrides) {
  for (const auto& kv : overrides) base.push_back(kv);
}

ExperimentConfig build_config(const KeyValues& kv) {
  std::map<std::string, std::string> map;
  for (const auto& [k, v] : kv) {
    if (!known_keys().count(k)) {
      throw ConfigError("config: unknown key '" + k + "'");
    }
    map[k] = v;  // last occurrence wins
  }
  const auto has = [&](const char* k) { return map.count(k) > 0; };
  const auto need = [&](const char* k) -> const std::string& {
    auto it = map.find(k);
    if (it == map.end()) {
      throw ConfigError(std::string("config: missing required key '") + k +
                        "'");
    }
    return it->second;
  };

  ExperimentConfig cfg;

  const std::string family = need("family");
  if (family == "gaussian-mab") {
    cfg.family = ExperimentConfig::Family::GaussianMab;
  } else if (family == "linear-gaussian") {
    cfg.family = ExperimentConfig::Family::LinearGaussian;
  } else if (family == "bernoulli") {
    cfg.family = ExperimentConfig::Family::Bernoulli;
  } else {
    throw ConfigError("config: family must be gaussian-mab, linear-gaussian "
                      "or bernoulli, got '" + family + "'");
  }

  cfg.K = int(parse_int("K", need("K")));
  cfg.m = int(parse_int("m", need("m")));
  cfg.n = int(parse_int("n", need("n")));
  cfg.R = int(parse_int("R", need("R")));
  if (cfg.K < 1 || cfg.m < 1 || cfg.n < 1 || cfg.R < 1) {
    throw ConfigError("config: K, m, n and R must all be >= 1");
  }
  cfg.seed = has("seed") ? parse_u64("seed", map["seed"]) : 0;

  if (cfg.family == ExperimentConfig::Family::LinearGaussian) {
    cfg.d = int(parse_int("d", need("d")));
    if (cfg.d < 1) throw ConfigError("config: d must be >= 1");
    if (cfg.K < cfg.d) {
      throw ConfigError("config: linear-gaussian needs K >= d");
    }
  } else {
    if (has("d") && int(parse_int("d", map["d"])) != cfg.K) {
      throw ConfigError(
          "config: d must equal K for finite-armed families (omit it)");
    }
    cfg.d = cfg.K;
  }

  const std::string setting = has("setting") ? map["setting"] : "bayesian";
  if (setting == "bayesian") {
    cfg.setting = ExperimentConfig::Setting::Bayesian;
  } else if (setting == "frequentist") {
    cfg.setting = ExperimentConfig::Setting::Frequentist;
  } else {
    throw ConfigError("config: setting must be bayesian or frequentist");
  }

  const int dim =
      cfg.family == ExperimentConfig::Family::LinearGaussian ? cfg.d : cfg.K;

  if (cfg.family == ExperimentConfig::Family::Bernoulli) {
    if (cfg.setting != ExperimentConfig::Setting::Frequentist) {
      throw ConfigError(
          "config: the bernoulli family has no tractable meta-prior; use "
          "setting = frequentist");
    }
    VectorXd alpha = parse_vector("alpha_star", need("alpha_star"));
    VectorXd beta = parse_vector("beta_star", need("beta_star"));
    if (alpha.size() == 1) alpha = VectorXd::Constant(cfg.K, alpha[0]);
    if (beta.size() == 1) beta = VectorXd::Constant(cfg.K, beta[0]);
    if (alpha.size() != cfg.K || beta.size() != cfg.K) {
      throw ConfigError(
          "config: alpha_star/beta_star must have K entries (or one, "
          "broadcast)");
    }
    for (int a = 0; a < cfg.K; ++a) {
      if (!(alpha[a] > 0.0) || !(beta[a] > 0.0)) {
        throw ConfigError("config: alpha_star/beta_star must be positive");
      }
      cfg.beta_prior.emplace_back(alpha[a], beta[a]);
    }
  } else {
    cfg.sigma = parse_double("sigma", need("sigma"));
    if (!(cfg.sigma > 0.0)) throw ConfigError("config: sigma must be > 0");

    if (has("Sigma0")) {
      cfg.Sigma0 = parse_matrix("Sigma0", map["Sigma0"]);
    } else {
      const double s0 = parse_double("sigma0", need("sigma0"));
      if (s0 < 0.0) throw ConfigError("config: sigma0 must be >= 0");
      cfg.Sigma0 = s0 * s0 * MatrixXd::Identity(dim, dim);
    }
    if (cfg.Sigma0.rows() != dim || cfg.Sigma0.cols() != dim) {
      throw ConfigError("config: Sigma0 must be " + std::to_string(dim) + "x" +
                        std::to_string(dim));
    }

    if (has("Sigma_q")) {
      cfg.Sigma_q = parse_matrix("Sigma_q", map["Sigma_q"]);
    } else {
      const double sq =
          has("sigma_q") ? parse_double("sigma_q", map["sigma_q"]) : 1.0;
      if (sq < 0.0) throw ConfigError("config: sigma_q must be >= 0");
      cfg.Sigma_q = sq * sq * MatrixXd::Identity(dim, dim);
    }
    if (cfg.Sigma_q.rows() != dim || cfg.Sigma_q.cols() != dim) {
      throw ConfigError("config: Sigma_q must be " + std::to_string(dim) +
                        "x" + std::to_string(dim));
    }

    cfg.psi_q = has("psi_q") ? parse_vector("psi_q", map["psi_q"])
                             : VectorXd::Zero(dim);
    if (cfg.psi_q.size() == 1 && dim > 1) {
      cfg.psi_q = VectorXd::Constant(dim, cfg.psi_q[0]);
    }
    if (cfg.psi_q.size() != dim) {
      throw ConfigError("config: psi_q must have " + std::to_string(dim) +
                        " entries");
    }

    if (cfg.setting == ExperimentConfig::Setting::Frequentist) {
      cfg.theta_star = parse_vector("theta_star", need("theta_star"));
      if (cfg.theta_star.size() == 1 && dim > 1) {
        cfg.theta_star = VectorXd::Constant(dim, cfg.theta_star[0]);
      }
      if (cfg.theta_star.size() != dim) {
        throw ConfigError("config: theta_star must have " +
                          std::to_string(dim) + " entries");
      }
    } else if (has("theta_star")) {
      throw ConfigError(
          "config: theta_star is only meaningful with setting = frequentist");
    }
  }

  PolicyKind policy = PolicyKind::thompson();
  if (has("policy")) {
    const std::string p = map["policy"];
    const double delta =
        has("delta") ? parse_double("delta", map["delta"]) : 0.1;
    if (p == "thompson") {
      policy = PolicyKind::thompson();
    } else if (p == "bayes-ucb") {
      if (!(delta > 0.0) || delta > 1.0) {
        throw ConfigError("config: delta must be in (0, 1]");
      }
      policy = PolicyKind::bayes_ucb(delta);
    } else {
      throw ConfigError("config: policy must be thompson or bayes-ucb");
    }
  }

  const int t0 = has("t0") ? int(parse_int("t0", map["t0"])) : 5;
  FMode mode = FMode::Commit;
  if (has("mode")) {
    if (map["mode"] == "commit") {
      mode = FMode::Commit;
    } else if (map["mode"] == "continual") {
      mode = FMode::Continual;
    } else {
      throw ConfigError("config: mode must be commit or continual");
    }
  }
  const double mis_range =
      has("mis_offset_range")
          ? parse_double("mis_offset_range", map["mis_offset_range"])
          : 50.0;
  if (mis_range < 0.0) {
    throw ConfigError("config: mis_offset_range must be >= 0");
  }

  std::vector<int> m0_grid = has("m0_grid")
                                 ? parse_int_list("m0_grid", map["m0_grid"])
                                 : default_m0_grid(cfg.m);
  for (int v : m0_grid) {
    if (v < 1) throw ConfigError("config: m0_grid values must be >= 1");
  }

  const auto agent_names = split(need("agents"), ',');
  if (agent_names.empty()) throw ConfigError("config: agents must be non-empty");
  const bool bernoulli = cfg.family == ExperimentConfig::Family::Bernoulli;
  for (const auto& name : agent_names) {
    AgentSpec a;
    a.policy = policy;
    a.t0 = t0;
    a.mode = mode;
    a.mis_offset_range = mis_range;
    if (name == "oracle-ts") {
      a.kind = AgentSpec::Kind::OracleTs;
      a.tag = "oracle-ts";
      cfg.agents.push_back(a);
    } else if (name == "ts") {
      a.kind = AgentSpec::Kind::AgnosticTs;
      a.tag = "ts";
      cfg.agents.push_back(a);
    } else if (name == "b-metasrm") {
      if (bernoulli) {
        throw ConfigError(
            "config: b-metasrm is not available for the bernoulli family "
            "(no tractable meta-prior)");
      }
      a.kind = AgentSpec::Kind::BMetaSrm;
      a.tag = "b-metasrm";
      cfg.agents.push_back(a);
    } else if (name == "mis-b-metasrm") {
      if (bernoulli) {
        throw ConfigError(
            "config: mis-b-metasrm is not available for the bernoulli family");
      }
      a.kind = AgentSpec::Kind::MisBMetaSrm;
      a.tag = "mis-b-metasrm";
      cfg.agents.push_back(a);
    } else if (name == "f-metasrm") {
      if (bernoulli && t0 < 2) {
        throw ConfigError("config: t0 must be >= 2");
      }
      if (bernoulli && t0 > cfg.n) {
        throw ConfigError("config: t0 must be <= n");
      }
      if (!bernoulli && cfg.d > cfg.n) {
        throw ConfigError(
            "config: f-metasrm needs n >= d to pull the basis each "
            "exploration task");
      }
      if (mode == FMode::Continual) {
        // Continual estimation has no commit point; m0_grid does not apply.
        a.kind = AgentSpec::Kind::FMetaSrm;
        a.tag = "f-metasrm";
        cfg.agents.push_back(a);
      } else {
        for (int m0 : m0_grid) {
          AgentSpec f = a;
          f.kind = AgentSpec::Kind::FMetaSrm;
          f.m0 = m0;
          f.tag = "f-metasrm[m0=" + std::to_string(m0) + "]";
          cfg.agents.push_back(f);
        }
      }
    } else {
      throw ConfigError("config: unknown agent '" + name +
                        "' (expected oracle-ts, ts, b-metasrm, mis-b-metasrm "
                        "or f-metasrm)");
    }
  }
  std::set<std::string> tags;
  for (const auto& a : cfg.agents) {
    if (!tags.insert(a.tag).second) {
      throw ConfigError("config: duplicate agent '" + a.tag + "'");
    }
  }

  cfg.resample_arms = has("resample_arms")
                          ? parse_bool("resample_arms", map["resample_arms"])
                          : true;
  cfg.workers = has("workers") ? int(parse_int("workers", map["workers"])) : 0;
  if (cfg.workers < 0) throw ConfigError("config: workers must be >= 0");
  if (has("out")) cfg.out = map["out"];
  if (cfg.out.empty()) throw ConfigError("config: out must be non-empty");

  // Surface covariance problems at validation time rather than mid-run.
  if (!bernoulli) {
    try {
      linalg::require_psd(cfg.Sigma0, "Sigma0");
      linalg::require_psd(cfg.Sigma_q, "Sigma_q");
    } catch (const std::exception& e) {
      throw ConfigError(std::string("config: ") + e.what());
    }
  }
  return cfg;
}

const std::vector<Preset>& presets() {
  static const std::vector<Preset> list = {
      {"gaussian-mab-fig2",
       "Gaussian K-armed bandit, Bayesian setting (K=10, n=20, m=200, R=100)",
       "family = gaussian-mab\n"
       "K = 10\n"
       "n = 20\n"
       "m = 200\n"
       "R = 100\n"
       "seed = 1\n"
       "setting = bayesian\n"
       "sigma = 1\n"
       "sigma_q = 1\n"
       "sigma0 = 0.1\n"
       "agents = oracle-ts, ts, b-metasrm, mis-b-metasrm, f-metasrm\n"
       "policy = thompson\n"
       "mode = commit\n"
       "m0_grid = 1,2,5,10,20,50,100,200\n"
       "mis_offset_range = 50\n"
       "out = gaussian-mab-fig2.csv\n"},
      {"linear-fig3",
       "Linear Gaussian bandit, K=5d arms on the unit sphere (d=4 default)",
       "family = linear-gaussian\n"
       "d = 4\n"
       "K = 20\n"
       "n = 20\n"
       "m = 20\n"
       "R = 100\n"
       "seed = 1\n"
       "setting = bayesian\n"
       "sigma = 1\n"
       "sigma_q = 1\n"
       "sigma0 = 0.1\n"
       "agents = oracle-ts, ts, b-metasrm, mis-b-metasrm, f-metasrm\n"
       "policy = thompson\n"
       "mode = commit\n"
       "m0_grid = 1,2,5,10,20\n"
       "resample_arms = true\n"
       "out = linear-fig3.csv\n"},
      {"linear-10d",
       "Linear Gaussian bandit with the denser K=10d arm set (d=4 default)",
       "family = linear-gaussian\n"
       "d = 4\n"
       "K = 40\n"
       "n = 20\n"
       "m = 20\n"
       "R = 100\n"
       "seed = 20240619\n"
       "setting = bayesian\n"
       "sigma = 1\n"
       "sigma_q = 1\n"
       "sigma0 = 0.1\n"
       "agents = oracle-ts, ts, b-metasrm, mis-b-metasrm, f-metasrm\n"
       "policy = thompson\n"
       "mode = commit\n"
       "m0_grid = 1,2,5,10,20\n"
       "resample_arms = true\n"
       "out = linear-10d.csv\n"},
      {"frequentist-appD",
       "Fixed-prior Gaussian MAB with block-correlated arms, continual "
       "estimation",
       "family = gaussian-mab\n"
       "K = 6\n"
       "n = 20\n"
       "m = 500\n"
       "R = 20\n"
       "seed = 20240620\n"
       "setting = frequentist\n"
       "theta_star = 0.5, 0, 0, 0.1, 0, 0\n"
       "sigma = 1\n"
       "sigma_q = 1\n"
       "Sigma0 = 0.05, 0.0475, 0.0475, 0, 0, 0; "
       "0.0475, 0.05, 0.0475, 0, 0, 0; "
       "0.0475, 0.0475, 0.05, 0, 0, 0; "
       "0, 0, 0, 0.05, 0.0475, 0.0475; "
       "0, 0, 0, 0.0475, 0.05, 0.0475; "
       "0, 0, 0, 0.0475, 0.0475, 0.05\n"
       "agents = oracle-ts, ts, b-metasrm, f-metasrm\n"
       "policy = thompson\n"
       "mode = continual\n"
       "out = frequentist-appD.csv\n"},
      {"bernoulli-etc",
       "Bernoulli bandit with per-arm Beta priors, explore-then-commit "
       "estimation",
       "family = bernoulli\n"
       "K = 5\n"
       "n = 20\n"
       "m = 200\n"
       "R = 100\n"
       "seed = 20240621\n"
       "setting = frequentist\n"
       "alpha_star = 2, 4, 9, 5, 3\n"
       "beta_star = 8, 6, 6, 5, 7\n"
       "agents = oracle-ts, ts, f-metasrm\n"
       "t0 = 5\n"
       "mode = commit\n"
       "m0_grid = 5,10,25,50,100\n"
       "out = bernoulli-etc.csv\n"},
  };
  return list;
}

const Preset& find_preset(const std::string& name) {
  for (const auto& p : presets()) {
    if (p.name == name) return p;
  }
  throw ConfigError("config: unknown preset '" + name + "'");
}

}  // namespace metasrm
