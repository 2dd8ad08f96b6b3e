#include "metasrm/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "metasrm/environments.hpp"

namespace metasrm {

namespace {

constexpr std::uint64_t kArmsPhase = 0x10;
constexpr std::uint64_t kThetaPhase = 0x11;

std::uint64_t fingerprint_means(const VectorXd& means) {
  return hash_bytes(means.data(), std::size_t(means.size()) * sizeof(double));
}

int resolve_workers(const ExperimentConfig& config) {
  int w = config.workers;
  if (w == 0) {
    if (const char* env = std::getenv("METASRM_WORKERS")) {
      w = std::atoi(env);
    }
  }
  if (w <= 0) w = int(std::thread::hardware_concurrency());
  return std::max(1, w);
}

struct ReplicationContext {
  ArmSet arms = ArmSet::finite(1);
  std::vector<TaskInstance> tasks;
  std::vector<std::uint64_t> fingerprints;
  VectorXd theta_star;  // Gaussian families
};

ReplicationContext build_replication(const ExperimentConfig& config, int rep) {
  ReplicationContext ctx;
  const StreamFactory env_streams(config.seed, std::uint64_t(rep),
                                  StreamFactory::kEnvAgent);
  if (config.family == ExperimentConfig::Family::Bernoulli) {
    ctx.arms = ArmSet::finite(config.K);
    const BetaPriorSpec prior(config.beta_prior);
    for (int s = 0; s < config.m; ++s) {
      Rng rng = env_streams.task_stream(std::uint64_t(s));
      ctx.tasks.push_back(sample_task(prior, rng));
    }
  } else {
    if (config.family == ExperimentConfig::Family::LinearGaussian) {
      const std::uint64_t arms_rep =
          config.resample_arms ? std::uint64_t(rep) : 0;
      Rng arms_rng({config.seed, arms_rep, StreamFactory::kEnvAgent, 0,
                    kArmsPhase});
      ctx.arms = sample_unit_sphere_arms(config.K, config.d, arms_rng);
    } else {
      ctx.arms = ArmSet::finite(config.K);
    }
    if (config.setting == ExperimentConfig::Setting::Bayesian) {
      Rng theta_rng({config.seed, std::uint64_t(rep),
                     StreamFactory::kEnvAgent, 0, kThetaPhase});
      ctx.theta_star =
          linalg::mvn_sample(config.psi_q, config.Sigma_q, theta_rng);
    } else {
      ctx.theta_star = config.theta_star;
    }
    const GaussianPriorSpec prior(ctx.theta_star, config.Sigma0, config.sigma,
                                  ctx.arms);
    for (int s = 0; s < config.m; ++s) {
      Rng rng = env_streams.task_stream(std::uint64_t(s));
      ctx.tasks.push_back(sample_task(prior, rng));
    }
  }
  for (const auto& task : ctx.tasks) {
    ctx.fingerprints.push_back(fingerprint_means(task.means()));
  }
  return ctx;
}

std::vector<RegretRow> run_agent(const ExperimentConfig& config,
                                 const AgentSpec& agent,
                                 const ReplicationContext& ctx, int rep) {
  const StreamFactory streams(config.seed, std::uint64_t(rep),
                              hash_bytes(agent.tag.data(), agent.tag.size()));
  const std::span<const TaskInstance> tasks(ctx.tasks);

  if (config.family == ExperimentConfig::Family::Bernoulli) {
    switch (agent.kind) {
      case AgentSpec::Kind::OracleTs: {
        BetaParams params(config.beta_prior.begin(), config.beta_prior.end());
        return run_fixed_prior_ts(BetaBelief(params), tasks, config.n, streams,
                                  agent.tag);
      }
      case AgentSpec::Kind::AgnosticTs:
        return run_fixed_prior_ts(BetaBelief::uniform(config.K), tasks,
                                  config.n, streams, agent.tag);
      case AgentSpec::Kind::FMetaSrm: {
        FMetaSrmOptions opt;
        opt.mode = agent.mode;
        opt.strategy =
            ExploreStrategy::bernoulli_batched(agent.t0,
                                               std::max(1, agent.m0));
        return f_meta_srm(config.K, opt, tasks, config.n, streams, agent.tag);
      }
      default:
        throw std::logic_error("run_agent: agent not valid for bernoulli");
    }
  }

  const GaussianEnv env{ctx.arms, config.Sigma0, config.sigma};
  const int dim = ctx.arms.dim();
  switch (agent.kind) {
    case AgentSpec::Kind::OracleTs:
      return run_fixed_prior_ts(env,
                                GaussianBelief(ctx.theta_star, config.Sigma0),
                                tasks, config.n, streams, agent.tag);
    case AgentSpec::Kind::AgnosticTs: {
      if (ctx.arms.kind() == ArmSet::Kind::FeatureVectors) {
        // Structure-ignoring baseline: model the K arm means as independent
        // with the marginal variance a^T (Sigma_q + Sigma0) a per arm.
        const MatrixXd marginal = config.Sigma_q + config.Sigma0;
        MatrixXd cov = MatrixXd::Zero(config.K, config.K);
        for (int a = 0; a < config.K; ++a) {
          cov(a, a) = ctx.arms.quad_form(marginal, a);
        }
        const GaussianEnv flat{ArmSet::finite(config.K),
                               MatrixXd::Zero(config.K, config.K),
                               config.sigma};
        return run_fixed_prior_ts(
            flat, GaussianBelief(VectorXd::Zero(config.K), cov), tasks,
            config.n, streams, agent.tag);
      }
      return run_fixed_prior_ts(
          env,
          GaussianBelief(VectorXd::Zero(dim), config.Sigma_q + config.Sigma0),
          tasks, config.n, streams, agent.tag);
    }
    case AgentSpec::Kind::BMetaSrm: {
      BMetaSrmOptions opt;
      opt.policy = agent.policy;
      opt.psi_q = config.psi_q;
      opt.Sigma_q = config.Sigma_q;
      return b_meta_srm(env, opt, tasks, config.n, streams, agent.tag);
    }
    case AgentSpec::Kind::MisBMetaSrm: {
      BMetaSrmOptions opt;
      opt.policy = agent.policy;
      opt.psi_q = config.psi_q;
      opt.Sigma_q = config.Sigma_q;
      return mis_b_meta_srm(env, opt, agent.mis_offset_range, tasks, config.n,
                            streams, agent.tag);
    }
    case AgentSpec::Kind::FMetaSrm: {
      FMetaSrmOptions opt;
      opt.mode = agent.mode;
      opt.strategy = ExploreStrategy::linear_basis(std::max(1, agent.m0));
      const GaussianBelief agnostic(VectorXd::Zero(dim),
                                    config.Sigma_q + config.Sigma0);
      return f_meta_srm(env, opt, agnostic, tasks, config.n, streams,
                        agent.tag);
    }
  }
  throw std::logic_error("run_agent: unhandled agent kind");
}

std::vector<ResultRow> run_replication(const ExperimentConfig& config,
                                       int rep) {
  const ReplicationContext ctx = build_replication(config, rep);
  // agent-major results, then reordered to (task, agent)
  std::vector<std::vector<RegretRow>> per_agent;
  per_agent.reserve(config.agents.size());
  for (const auto& agent : config.agents) {
    per_agent.push_back(run_agent(config, agent, ctx, rep));
  }
  std::vector<ResultRow> rows;
  rows.reserve(config.agents.size() * std::size_t(config.m));
  for (int s = 0; s < config.m; ++s) {
    for (std::size_t a = 0; a < per_agent.size(); ++a) {
      const RegretRow& r = per_agent[a][std::size_t(s)];
      rows.push_back({rep, r.task, r.agent, r.expected_simple_regret,
                      r.realized_simple_regret, r.cumulative_regret,
                      ctx.fingerprints[std::size_t(s)]});
    }
  }
  return rows;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::vector<ResultRow> run_experiment_rows(const ExperimentConfig& config) {
  const int workers = resolve_workers(config);
  std::vector<std::vector<ResultRow>> per_rep(std::size_t(config.R));
  if (workers == 1 || config.R == 1) {
    for (int rep = 0; rep < config.R; ++rep) {
      per_rep[std::size_t(rep)] = run_replication(config, rep);
    }
  } else {
    std::atomic<int> next{0};
    std::atomic<bool> failed{false};
    std::string error_message;
    std::mutex error_mutex;
    auto worker = [&] {
      for (;;) {
        const int rep = next.fetch_add(1);
        if (rep >= config.R || failed.load()) return;
        try {
          per_rep[std::size_t(rep)] = run_replication(config, rep);
        } catch (const std::exception& e) {
          std::lock_guard<std::mutex> lock(error_mutex);
          failed.store(true);
          if (error_message.empty()) error_message = e.what();
          return;
        }
      }
    };
    std::vector<std::thread> pool;
    const int count = std::min(workers, config.R);
    pool.reserve(std::size_t(count));
    for (int i = 0; i < count; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (failed.load()) throw std::runtime_error(error_message);
  }
  std::vector<ResultRow> rows;
  for (auto& chunk : per_rep) {
    rows.insert(rows.end(), chunk.begin(), chunk.end());
  }
  return rows;
}

void run_experiment(const ExperimentConfig& config) {
  const std::vector<ResultRow> rows = run_experiment_rows(config);
  std::ofstream out(config.out, std::ios::binary);
  if (!out) {
    throw std::runtime_error("run_experiment: cannot open output file '" +
                             config.out + "'");
  }
  write_result_csv(out, rows);
  if (!out) {
    throw std::runtime_error("run_experiment: failed writing '" + config.out +
                             "'");
  }
}

void write_result_csv(std::ostream& out, std::span<const ResultRow> rows) {
  out << "replication,task,agent,expected_simple_regret,"
         "realized_simple_regret,cumulative_regret,seed_fp\n";
  char fp[32];
  for (const auto& r : rows) {
    std::snprintf(fp, sizeof(fp), "%016" PRIx64, r.seed_fp);
    out << r.replication << ',' << r.task << ',' << r.agent << ','
        << format_double(r.expected_simple_regret) << ','
        << format_double(r.realized_simple_regret) << ','
        << format_double(r.cumulative_regret) << ',' << fp << '\n';
  }
}

std::vector<ResultRow> read_result_csv(std::istream& in) {
  std::vector<ResultRow> rows;
  std::string line;
  int lineno = 0;
  if (!std::getline(in, line)) {
    throw std::runtime_error("result csv: empty file");
  }
  ++lineno;
  if (line != "replication,task,agent,expected_simple_regret,"
              "realized_simple_regret,cumulative_regret,seed_fp") {
    throw std::runtime_error("result csv: unexpected header on line 1");
  }
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() != 7) {
      throw std::runtime_error("result csv: line " + std::to_string(lineno) +
                               ": expected 7 fields, got " +
                               std::to_string(fields.size()));
    }
    try {
      ResultRow r;
      r.replication = std::stoi(fields[0]);
      r.task = std::stoi(fields[1]);
      r.agent = fields[2];
      r.expected_simple_regret = std::stod(fields[3]);
      r.realized_simple_regret = std::stod(fields[4]);
      r.cumulative_regret = std::stod(fields[5]);
      r.seed_fp = std::stoull(fields[6], nullptr, 16);
      rows.push_back(std::move(r));
    } catch (const std::exception&) {
      throw std::runtime_error("result csv: line " + std::to_string(lineno) +
                               ": malformed field");
    }
  }
  return rows;
}

namespace {

// Family tag: the agent name with any [m0=...] suffix removed.
std::string family_of(const std::string& agent) {
  const auto pos = agent.find('[');
  return pos == std::string::npos ? agent : agent.substr(0, pos);
}

struct AgentCurve {
  std::vector<int> tasks;
  std::vector<double> means;
  std::vector<double> ses;
};

}  // namespace

std::vector<SummaryRow> summarize_rows(std::span<const ResultRow> rows,
                                       const SummarizeOptions& options) {
  if (rows.empty()) {
    throw std::runtime_error("summarize: no rows");
  }
  // Preserve first-appearance agent order.
  std::vector<std::string> agent_order;
  std::map<std::string, std::map<int, std::vector<double>>> grouped;
  for (const auto& r : rows) {
    if (!grouped.count(r.agent)) agent_order.push_back(r.agent);
    grouped[r.agent][r.task].push_back(r.expected_simple_regret);
  }

  std::map<std::string, AgentCurve> curves;
  for (const auto& agent : agent_order) {
    AgentCurve c;
    for (const auto& [task, values] : grouped[agent]) {
      double mean = 0.0;
      for (double v : values) mean += v;
      mean /= double(values.size());
      double se = 0.0;
      if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - mean) * (v - mean);
        se = std::sqrt(ss / double(values.size() - 1) /
                       double(values.size()));
      }
      c.tasks.push_back(task);
      c.means.push_back(mean);
      c.ses.push_back(se);
    }
    curves[agent] = std::move(c);
  }

  std::vector<SummaryRow> out;
  const auto emit = [&out](const std::string& agent, const AgentCurve& c) {
    double running = 0.0;
    for (std::size_t i = 0; i < c.tasks.size(); ++i) {
      running += c.means[i];
      out.push_back({c.tasks[i], agent, c.means[i], c.ses[i],
                     running / double(i + 1)});
    }
  };
  for (const auto& agent : agent_order) emit(agent, curves[agent]);

  if (options.pointwise_best) {
    // Group m0 variants by family, in family first-appearance order.
    std::vector<std::string> family_order;
    std::map<std::string, std::vector<std::string>> families;
    for (const auto& agent : agent_order) {
      const std::string fam = family_of(agent);
      if (fam == agent) continue;  // not an m0 variant
      if (!families.count(fam)) family_order.push_back(fam);
      families[fam].push_back(agent);
    }
    for (const auto& fam : family_order) {
      const auto& members = families[fam];
      if (members.size() < 2) continue;
      const AgentCurve& first = curves[members[0]];
      AgentCurve best = first;
      for (std::size_t i = 0; i < best.tasks.size(); ++i) {
        for (std::size_t j = 1; j < members.size(); ++j) {
          const AgentCurve& c = curves[members[j]];
          if (c.tasks.size() != best.tasks.size() ||
              c.tasks[i] != best.tasks[i]) {
            throw std::runtime_error(
                "summarize: m0 variants of '" + fam +
                "' cover different task ranges");
          }
          if (c.means[i] < best.means[i]) {
            best.means[i] = c.means[i];
            best.ses[i] = c.ses[i];
          }
        }
      }
      emit(fam + "[best]", best);
    }
  }
  return out;
}

void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows) {
  out << "task,agent,mean,stderr,cum_mean\n";
  for (const auto& r : rows) {
    out << r.task << ',' << r.agent << ',' << format_double(r.mean) << ','
        << format_double(r.stderr_) << ',' << format_double(r.cum_mean)
        << '\n';
  }
}

void summarize_file(const std::string& in_path, const std::string& out_path,
                    const SummarizeOptions& options) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) {
    throw std::runtime_error("summarize: cannot open input file '" + in_path +
                             "'");
  }
  const auto rows = read_result_csv(in);
  const auto summary = summarize_rows(rows, options);
  std::ofstream out(out_path, std::ios::binary);
  if (!out) {
    throw std::runtime_error("summarize: cannot open output file '" +
                             out_path + "'");
  }
  write_summary_csv(out, summary);
}

}  // namespace metasrm
