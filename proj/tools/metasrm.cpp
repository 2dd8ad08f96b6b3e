// Command-line harness: run experiments from presets or config files,
// summarize result CSVs, list presets, validate configs.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "metasrm/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

metasrm::KeyValues collect_config(const std::string& preset,
                                  const std::string& config_path,
                                  const std::vector<std::string>& sets) {
  metasrm::KeyValues kv;
  if (!preset.empty()) {
    kv = metasrm::parse_config_text(metasrm::find_preset(preset).text);
  }
  if (!config_path.empty()) {
    metasrm::apply_overrides(kv, metasrm::parse_config_file(config_path));
  }
  if (kv.empty() && sets.empty()) {
    throw metasrm::ConfigError("need --preset and/or --config");
  }
  for (const auto& s : sets) {
    if (s.find('=') == std::string::npos) {
      throw metasrm::ConfigError("--set expects key=value, got '" + s + "'");
    }
    // Reuse the config-line parser so keys and values are trimmed the same way.
    metasrm::apply_overrides(kv, metasrm::parse_config_text(s));
  }
  return kv;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Meta-learning bandit simulation harness"};
  app.require_subcommand(1);

  std::string preset, config_path, out_override, in_path, out_path;
  std::vector<std::string> sets;
  bool no_pointwise_best = false;

  auto* run = app.add_subcommand("run", "Run an experiment and write its CSV");
  run->add_option("--preset", preset, "Preset name (see `presets list`)");
  run->add_option("--config", config_path, "Config file path");
  run->add_option("--set", sets, "Override a config key, key=value")
      ->take_all();
  run->add_option("--out", out_override, "Override the output path");

  auto* summ = app.add_subcommand("summarize",
                                  "Aggregate a result CSV into per-task "
                                  "means, standard errors and running means");
  summ->add_option("--in", in_path, "Result CSV")->required();
  summ->add_option("--out", out_path, "Summary CSV")->required();
  summ->add_flag("--no-pointwise-best", no_pointwise_best,
                 "Skip the pointwise-best rows over m0 sweeps");

  auto* presets_cmd = app.add_subcommand("presets", "Preset utilities");
  auto* presets_list = presets_cmd->add_subcommand("list", "List presets");

  auto* validate = app.add_subcommand("validate-config",
                                      "Parse and validate a config, then exit");
  validate->add_option("--preset", preset, "Preset name");
  validate->add_option("--config", config_path, "Config file path");
  validate->add_option("--set", sets, "Override a config key, key=value")
      ->take_all();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      auto kv = collect_config(preset, config_path, sets);
      if (!out_override.empty()) kv.emplace_back("out", out_override);
      const auto config = metasrm::build_config(kv);
      metasrm::run_experiment(config);
      std::cout << "wrote " << config.out << "\n";
      return kExitOk;
    }
    if (summ->parsed()) {
      metasrm::SummarizeOptions options;
      options.pointwise_best = !no_pointwise_best;
      metasrm::summarize_file(in_path, out_path, options);
      std::cout << "wrote " << out_path << "\n";
      return kExitOk;
    }
    if (presets_cmd->parsed()) {
      if (!presets_list->parsed()) {
        std::cerr << "usage: metasrm presets list\n";
        return kExitConfig;
      }
      for (const auto& p : metasrm::presets()) {
        std::printf("%-20s %s\n", p.name.c_str(), p.description.c_str());
      }
      return kExitOk;
    }
    if (validate->parsed()) {
      const auto kv = collect_config(preset, config_path, sets);
      (void)metasrm::build_config(kv);
      std::cout << "config ok\n";
      return kExitOk;
    }
  } catch (const metasrm::ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitConfig;
}
