#pragma once

#include <iosfwd>
#include <span>

#include "metasrm/config.hpp"

namespace metasrm {

// One emitted CSV row. seed_fp fingerprints the task's means so that the
// common-random-task coupling across agents is checkable from the output.
struct ResultRow {
  int replication = 0;
  int task = 0;
  std::string agent;
  double expected_simple_regret = 0.0;
  double realized_simple_regret = 0.0;
  double cumulative_regret = 0.0;
  std::uint64_t seed_fp = 0;
};

// Runs the configured experiment in memory. Rows are ordered by
// (replication, task, agent position in the config), independent of the
// worker count.
std::vector<ResultRow> run_experiment_rows(const ExperimentConfig& config);

// run_experiment_rows plus CSV emission to config.out.
void run_experiment(const ExperimentConfig& config);

void write_result_csv(std::ostream& out, std::span<const ResultRow> rows);
std::vector<ResultRow> read_result_csv(std::istream& in);

struct SummaryRow {
  int task = 0;
  std::string agent;
  double mean = 0.0;
  double stderr_ = 0.0;
  double cum_mean = 0.0;
};

struct SummarizeOptions {
  // Add a "<family>[best]" group with the per-task minimum over agents that
  // differ only in m0.
  bool pointwise_best = true;
};

std::vector<SummaryRow> summarize_rows(std::span<const ResultRow> rows,
                                       const SummarizeOptions& options = {});
void write_summary_csv(std::ostream& out, std::span<const SummaryRow> rows);

// File-to-file convenience used by the CLI.
void summarize_file(const std::string& in_path, const std::string& out_path,
                    const SummarizeOptions& options = {});

}  // namespace metasrm
