#include <doctest.h>

#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "metasrm/experiment.hpp"

using namespace metasrm;

namespace {

ExperimentConfig tiny_config(const std::string& extra = "") {
  const std::string text =
      "family = gaussian-mab\n"
      "K = 3\n"
      "m = 4\n"
      "n = 5\n"
      "R = 2\n"
      "seed = 77\n"
      "sigma = 1\n"
      "sigma_q = 1\n"
      "sigma0 = 0.1\n"
      "agents = oracle-ts, ts, b-metasrm, f-metasrm\n"
      "m0_grid = 1,2\n"
      "workers = 1\n" +
      extra;
  return build_config(parse_config_text(text));
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("comments, blanks and trimming") {
    const auto kv = parse_config_text(
        "# header comment\n"
        "\n"
        "  family =  gaussian-mab  # trailing comment\n"
        "K=2\n");
    REQUIRE(kv.size() == 2);
    CHECK(kv[0] == std::pair<std::string, std::string>("family",
                                                       "gaussian-mab"));
    CHECK(kv[1] == std::pair<std::string, std::string>("K", "2"));
  }
  SUBCASE("missing equals sign reports the line number") {
    try {
      parse_config_text("family = gaussian-mab\nbroken line\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("unknown keys are rejected by name") {
    try {
      tiny_config("bogus_key = 3\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("bogus_key") != std::string::npos);
    }
  }
  SUBCASE("bad numbers name the offending key") {
    try {
      tiny_config("sigma = abc\n");
      FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("sigma") != std::string::npos);
    }
  }
  SUBCASE("matrix parsing") {
    const auto cfg = tiny_config("Sigma0 = 0.01,0,0; 0,0.02,0; 0,0,0.03\n");
    CHECK(cfg.Sigma0(1, 1) == 0.02);
    CHECK(cfg.Sigma0(2, 2) == 0.03);
    CHECK_THROWS_AS(tiny_config("Sigma0 = 1,0; 0,1\n"), ConfigError);
    CHECK_THROWS_AS(tiny_config("Sigma0 = 1,0,0; 0,1\n"), ConfigError);
  }
  SUBCASE("later keys override earlier ones") {
    const auto cfg = tiny_config("K = 2\nsigma0 = 0.5\n");
    CHECK(cfg.K == 2);
    CHECK(cfg.Sigma0(0, 0) == doctest::Approx(0.25));
  }
  SUBCASE("agent expansion over the m0 grid") {
    const auto cfg = tiny_config("");
    REQUIRE(cfg.agents.size() == 5);  // oracle, ts, b, f[m0=1], f[m0=2]
    CHECK(cfg.agents[3].tag == "f-metasrm[m0=1]");
    CHECK(cfg.agents[4].tag == "f-metasrm[m0=2]");
  }
  SUBCASE("bernoulli family constraints") {
    const std::string base =
        "family = bernoulli\nK = 3\nm = 4\nn = 6\nR = 1\n"
        "setting = frequentist\nalpha_star = 2\nbeta_star = 5\nt0 = 2\n";
    const auto cfg = build_config(parse_config_text(base + "agents = ts\n"));
    CHECK(cfg.beta_prior.size() == 3);
    CHECK_THROWS_AS(
        build_config(parse_config_text(base + "agents = b-metasrm\n")),
        ConfigError);
    CHECK_THROWS_AS(build_config(parse_config_text(
                        "family = bernoulli\nK = 3\nm = 4\nn = 6\nR = 1\n"
                        "alpha_star = 2\nbeta_star = 5\nagents = ts\n")),
                    ConfigError);  // bayesian setting rejected
  }
  SUBCASE("frequentist gaussian needs theta_star") {
    CHECK_THROWS_AS(tiny_config("setting = frequentist\n"), ConfigError);
    const auto cfg =
        tiny_config("setting = frequentist\ntheta_star = 0.1,0.2,0.3\n");
    CHECK(cfg.theta_star.size() == 3);
  }
  SUBCASE("f-metasrm dimension constraint") {
    CHECK_THROWS_AS(tiny_config("n = 2\n"), ConfigError);  // d = K = 3 > n
  }
  SUBCASE("presets all validate") {
    for (const auto& p : presets()) {
      const auto cfg = build_config(parse_config_text(p.text));
      CHECK(!cfg.agents.empty());
    }
  }
  SUBCASE("bayes-ucb policy key") {
    const auto cfg = tiny_config("policy = bayes-ucb\ndelta = 0.2\n");
    CHECK(cfg.agents[2].policy.tag == PolicyKind::Tag::BayesUcb);
    CHECK(cfg.agents[2].policy.delta == 0.2);
    CHECK_THROWS_AS(tiny_config("policy = bayes-ucb\ndelta = 2\n"),
                    ConfigError);
    CHECK_THROWS_AS(tiny_config("policy = greedy\n"), ConfigError);
  }
}

TEST_CASE("trivial experiment emits one row per agent with zero regret") {
  const auto cfg = build_config(parse_config_text(
      "family = gaussian-mab\nK = 1\nm = 1\nn = 1\nR = 1\nseed = 5\n"
      "sigma = 1\nsigma_q = 1\nsigma0 = 0.1\n"
      "agents = oracle-ts, ts, b-metasrm, f-metasrm\nm0_grid = 1\n"
      "workers = 1\n"));
  const auto rows = run_experiment_rows(cfg);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) {
    CHECK(r.expected_simple_regret == 0.0);
    CHECK(r.task == 1);
    CHECK(r.replication == 0);
  }
}

TEST_CASE("experiment rows are deterministic and worker-count independent") {
  const auto cfg = tiny_config("");
  const auto rows1 = run_experiment_rows(cfg);
  const auto rows2 = run_experiment_rows(cfg);
  const auto cfg4 = tiny_config("workers = 4\n");
  const auto rows4 = run_experiment_rows(cfg4);
  REQUIRE(rows1.size() == rows2.size());
  REQUIRE(rows1.size() == rows4.size());
  for (std::size_t i = 0; i < rows1.size(); ++i) {
    CHECK(rows1[i].agent == rows2[i].agent);
    CHECK(rows1[i].expected_simple_regret == rows2[i].expected_simple_regret);
    CHECK(rows1[i].expected_simple_regret == rows4[i].expected_simple_regret);
    CHECK(rows1[i].seed_fp == rows4[i].seed_fp);
  }
}

TEST_CASE("adding agents never perturbs existing rows") {
  const auto base = tiny_config("agents = oracle-ts\nm0_grid = 1\n");
  const auto wider =
      tiny_config("agents = oracle-ts, ts, b-metasrm\nm0_grid = 1\n");
  const auto rows_base = run_experiment_rows(base);
  auto rows_wider = run_experiment_rows(wider);
  std::vector<ResultRow> oracle_rows;
  for (const auto& r : rows_wider) {
    if (r.agent == "oracle-ts") oracle_rows.push_back(r);
  }
  REQUIRE(oracle_rows.size() == rows_base.size());
  for (std::size_t i = 0; i < rows_base.size(); ++i) {
    CHECK(rows_base[i].expected_simple_regret ==
          oracle_rows[i].expected_simple_regret);
    CHECK(rows_base[i].cumulative_regret == oracle_rows[i].cumulative_regret);
    CHECK(rows_base[i].seed_fp == oracle_rows[i].seed_fp);
  }
}

TEST_CASE("fingerprints couple agents to common tasks") {
  const auto cfg = tiny_config("");
  const auto rows = run_experiment_rows(cfg);
  std::map<std::pair<int, int>, std::set<std::uint64_t>> fps;
  std::set<std::uint64_t> all;
  for (const auto& r : rows) {
    fps[{r.replication, r.task}].insert(r.seed_fp);
    all.insert(r.seed_fp);
  }
  for (const auto& [key, set] : fps) CHECK(set.size() == 1);
  CHECK(all.size() == fps.size());  // distinct tasks get distinct prints
}

TEST_CASE("result csv round trip and schema") {
  const auto cfg = tiny_config("");
  const auto rows = run_experiment_rows(cfg);
  std::stringstream ss;
  write_result_csv(ss, rows);
  std::string header;
  std::getline(ss, header);
  CHECK(header ==
        "replication,task,agent,expected_simple_regret,"
        "realized_simple_regret,cumulative_regret,seed_fp");
  ss.seekg(0);
  const auto back = read_result_csv(ss);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(back[i].agent == rows[i].agent);
    CHECK(back[i].expected_simple_regret == rows[i].expected_simple_regret);
    CHECK(back[i].seed_fp == rows[i].seed_fp);
  }
}

TEST_CASE("malformed result rows are rejected with line numbers") {
  std::stringstream ss(
      "replication,task,agent,expected_simple_regret,"
      "realized_simple_regret,cumulative_regret,seed_fp\n"
      "0,1,a,0.5,0.5,2.0,00ff\n"
      "0,2,a,not_a_number,0.5,2.0,00ff\n");
  try {
    read_result_csv(ss);
    FAIL("expected error");
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
}

TEST_CASE("summarize") {
  SUBCASE("single row summarizes to itself with zero stderr") {
    std::vector<ResultRow> rows = {{0, 1, "a", 0.4, 0.1, 2.0, 1}};
    const auto summary = summarize_rows(rows);
    REQUIRE(summary.size() == 1);
    CHECK(summary[0].mean == 0.4);
    CHECK(summary[0].stderr_ == 0.0);
    CHECK(summary[0].cum_mean == 0.4);
  }
  SUBCASE("two agents form two groups") {
    std::vector<ResultRow> rows = {{0, 1, "a", 0.4, 0, 0, 1},
                                   {0, 1, "b", 0.6, 0, 0, 1}};
    const auto summary = summarize_rows(rows);
    REQUIRE(summary.size() == 2);
    CHECK(summary[0].agent == "a");
    CHECK(summary[1].agent == "b");
  }
  SUBCASE("pointwise best over m0 variants") {
    std::vector<ResultRow> rows = {
        {0, 1, "f-metasrm[m0=1]", 0.5, 0, 0, 1},
        {0, 2, "f-metasrm[m0=1]", 0.2, 0, 0, 1},
        {0, 1, "f-metasrm[m0=2]", 0.3, 0, 0, 1},
        {0, 2, "f-metasrm[m0=2]", 0.4, 0, 0, 1},
    };
    const auto summary = summarize_rows(rows);
    REQUIRE(summary.size() == 6);
    CHECK(summary[4].agent == "f-metasrm[best]");
    CHECK(summary[4].mean == 0.3);
    CHECK(summary[5].mean == 0.2);
    CHECK(summary[5].cum_mean == doctest::Approx(0.25));
  }
  SUBCASE("no pointwise best for a single variant") {
    std::vector<ResultRow> rows = {{0, 1, "f-metasrm[m0=1]", 0.5, 0, 0, 1}};
    const auto summary = summarize_rows(rows);
    CHECK(summary.size() == 1);
  }
  SUBCASE("re-summarization is idempotent") {
    const auto cfg = tiny_config("");
    const auto rows = run_experiment_rows(cfg);
    const auto s1 = summarize_rows(rows);
    const auto s2 = summarize_rows(rows);
    std::stringstream a, b;
    write_summary_csv(a, s1);
    write_summary_csv(b, s2);
    CHECK(a.str() == b.str());
    std::string header;
    std::getline(a, header);
    CHECK(header == "task,agent,mean,stderr,cum_mean");
  }
}

TEST_CASE("end-to-end file determinism") {
  auto cfg = tiny_config("");
  cfg.out = "/tmp/metasrm_det_a.csv";
  run_experiment(cfg);
  cfg.out = "/tmp/metasrm_det_b.csv";
  run_experiment(cfg);
  std::ifstream fa(cfg.out), fb("/tmp/metasrm_det_a.csv");
  std::stringstream sa, sb;
  sa << fa.rdbuf();
  sb << fb.rdbuf();
  CHECK(sa.str() == sb.str());
  CHECK(!sa.str().empty());
  std::remove("/tmp/metasrm_det_a.csv");
  std::remove("/tmp/metasrm_det_b.csv");
}

TEST_CASE("linear family runs end to end") {
  const auto cfg = build_config(parse_config_text(
      "family = linear-gaussian\nd = 2\nK = 6\nm = 3\nn = 5\nR = 2\n"
      "seed = 9\nsigma = 1\nsigma_q = 1\nsigma0 = 0.1\n"
      "agents = oracle-ts, ts, b-metasrm, mis-b-metasrm, f-metasrm\n"
      "m0_grid = 1\nworkers = 1\n"));
  const auto rows = run_experiment_rows(cfg);
  CHECK(rows.size() == 5 * 3 * 2);
  for (const auto& r : rows) {
    CHECK(std::isfinite(r.expected_simple_regret));
    CHECK(r.expected_simple_regret >= 0.0);
  }
}

TEST_CASE("bernoulli family runs end to end") {
  const auto cfg = build_config(parse_config_text(
      "family = bernoulli\nK = 3\nm = 8\nn = 6\nR = 2\nseed = 10\n"
      "setting = frequentist\nalpha_star = 2\nbeta_star = 5\n"
      "agents = oracle-ts, ts, f-metasrm\nt0 = 2\nm0_grid = 3\n"
      "workers = 1\n"));
  const auto rows = run_experiment_rows(cfg);
  CHECK(rows.size() == 3 * 8 * 2);
}
