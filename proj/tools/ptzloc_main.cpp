// ptzloc: marker-based PTZ localisation simulator and dataset generator.
//
// Subcommands:
//   simulate     closed-loop scenario run -> log.csv + metrics.json
//   gen-dataset  synthetic training images + labels.jsonl
//   replay       re-run the range-estimation stage over a recorded log
//   eval         metrics.json from an existing log
//
// Exit codes: 0 success, 2 configuration/input error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ptzloc/config.hpp"
#include "ptzloc/dataset.hpp"
#include "ptzloc/sim.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string config_path;
  std::vector<std::string> overrides;
  std::int64_t seed = -1;  // -1: not given on the command line
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path, "JSON config file");
  cmd->add_option("--set", opts.overrides,
                  "Override a config field by dotted path, e.g. --set noise.phi_coupling=0.8");
  cmd->add_option("--seed", opts.seed, "RNG seed (overrides config and PTZLOC_SEED)");
}

// Seed precedence: --seed flag, then the config file, then PTZLOC_SEED as a
// last resort, then the built-in default.
ptzloc::AppConfig load_app_config(const CommonOpts& opts) {
  nlohmann::json raw = nlohmann::json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw ptzloc::ConfigError("cannot open config file '" + opts.config_path + "'");
    try {
      in >> raw;
    } catch (const nlohmann::json::exception& e) {
      throw ptzloc::ConfigError("config '" + opts.config_path + "' is not valid JSON: " + e.what());
    }
  }
  for (const auto& o : opts.overrides) ptzloc::apply_override(raw, o);

  const bool seed_in_config = raw.contains("seed");
  if (opts.seed >= 0) {
    raw["seed"] = static_cast<std::uint64_t>(opts.seed);
  } else if (!seed_in_config) {
    if (const char* env = std::getenv("PTZLOC_SEED")) raw["seed"] = std::strtoull(env, nullptr, 10);
  }

  ptzloc::AppConfig cfg = ptzloc::config_from_json(raw);
  cfg.validate();
  return cfg;
}

std::string sanitize(std::string s) {
  for (auto& ch : s)
    if (ch == ':' || ch == '/' || ch == '.') ch = '_';
  return s;
}

int cmd_simulate(const CommonOpts& common, const std::string& scenario_flag,
                 const std::string& filter_flag, const std::string& out_flag) {
  ptzloc::AppConfig app = load_app_config(common);
  if (!scenario_flag.empty()) app.scenario_name = scenario_flag;
  if (!filter_flag.empty()) app.filter.variant = filter_flag;
  if (!out_flag.empty()) app.out_dir = out_flag;
  app.validate();

  const ptzloc::RunConfig cfg = app.to_run_config();
  const ptzloc::RunResult result = ptzloc::run(cfg);

  fs::create_directories(app.out_dir);
  ptzloc::write_log_csv((fs::path(app.out_dir) / "log.csv").string(), result.log);
  ptzloc::write_metrics_json((fs::path(app.out_dir) / "metrics.json").string(), result.metrics);
  {
    std::ofstream out(fs::path(app.out_dir) / "config.json", std::ios::binary);
    out << ptzloc::config_to_json(app).dump(2) << '\n';
  }
  std::cout << "scenario " << cfg.name << " filter " << cfg.variant.name() << " steps "
            << result.log.steps.size() << " rho_rmse "
            << result.metrics.rho_rmse_m << " m -> " << app.out_dir << "\n";
  return 0;
}

int cmd_gen_dataset(const CommonOpts& common, const std::string& backgrounds_flag, int total_flag,
                    int positives_flag, const std::string& out_flag) {
  ptzloc::AppConfig app = load_app_config(common);
  if (!backgrounds_flag.empty()) app.dataset.backgrounds_dir = backgrounds_flag;
  if (total_flag >= 0) app.dataset.total = total_flag;
  if (positives_flag >= 0) app.dataset.positives = positives_flag;
  if (!out_flag.empty()) app.dataset.out_dir = out_flag;
  app.validate();
  if (app.dataset.backgrounds_dir.empty())
    throw ptzloc::ConfigError("dataset.backgrounds_dir: required (or pass --backgrounds)");

  const auto backgrounds = ptzloc::list_backgrounds(app.dataset.backgrounds_dir);
  ptzloc::generate(app.to_dataset_manifest(), backgrounds, app.to_render_options());
  std::cout << "wrote " << app.dataset.total << " images (" << app.dataset.positives
            << " positive) under " << app.dataset.out_dir << "\n";
  return 0;
}

int cmd_replay(const CommonOpts& common, const std::string& log_path,
               const std::vector<std::string>& filters, const std::string& out_flag) {
  ptzloc::AppConfig app = load_app_config(common);
  if (!out_flag.empty()) app.out_dir = out_flag;

  const ptzloc::RunLog source = ptzloc::read_log_csv(log_path);
  fs::create_directories(app.out_dir);
  std::vector<std::string> variants = filters;
  if (variants.empty()) variants.push_back(app.filter.variant);

  for (const auto& text : variants) {
    const ptzloc::FilterVariant variant = ptzloc::FilterVariant::parse(text);
    const ptzloc::RunLog replayed =
        ptzloc::replay_estimation(source, variant, app.to_filter_params(), app.seed);
    const ptzloc::RunMetrics metrics = ptzloc::evaluate_vs_truth(replayed, 0.175, app.roi.window_px);
    const std::string stem = "replay_" + sanitize(variant.name());
    ptzloc::write_log_csv((fs::path(app.out_dir) / (stem + "_log.csv")).string(), replayed);
    ptzloc::write_metrics_json((fs::path(app.out_dir) / (stem + "_metrics.json")).string(), metrics);
    std::cout << variant.name() << ": rho_median " << metrics.rho_median_m << " m, rho_rmse "
              << metrics.rho_rmse_m << " m\n";
  }
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& log_path, const std::string& out_path) {
  ptzloc::AppConfig app = load_app_config(common);
  const ptzloc::RunLog log = ptzloc::read_log_csv(log_path);
  const ptzloc::RunMetrics metrics = ptzloc::evaluate_vs_truth(log, 0.175, app.roi.window_px);
  ptzloc::write_metrics_json(out_path, metrics);
  std::cout << "rho_median " << metrics.rho_median_m << " m, rho_rmse " << metrics.rho_rmse_m
            << " m, 3d_rmse " << metrics.rmse_3d_m << " m -> " << out_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Marker-based PTZ localisation simulator"};
  app.require_subcommand(1);

  CommonOpts sim_common, gen_common, replay_common, eval_common;

  auto* sim_cmd = app.add_subcommand("simulate", "Run a closed-loop tracking scenario");
  std::string scenario_flag, filter_flag, sim_out;
  add_common(sim_cmd, sim_common);
  sim_cmd->add_option("--scenario", scenario_flag, "Preset scenario (s-path, square-indoor, square-outdoor)");
  sim_cmd->add_option("--filter", filter_flag, "Range filter: none|apf|pf-fixed[:sigma]|bw[:f_crit]");
  sim_cmd->add_option("--out", sim_out, "Output directory");

  auto* gen_cmd = app.add_subcommand("gen-dataset", "Generate the synthetic training dataset");
  std::string backgrounds_flag, gen_out;
  int total_flag = -1, positives_flag = -1;
  add_common(gen_cmd, gen_common);
  gen_cmd->add_option("--backgrounds", backgrounds_flag, "Directory of background images");
  gen_cmd->add_option("--total", total_flag, "Total number of images");
  gen_cmd->add_option("--positives", positives_flag, "Number of images containing the marker");
  gen_cmd->add_option("--out", gen_out, "Output directory");

  auto* replay_cmd = app.add_subcommand("replay", "Re-run range estimation over a recorded log");
  std::string replay_log, replay_out;
  std::vector<std::string> replay_filters;
  add_common(replay_cmd, replay_common);
  replay_cmd->add_option("--log", replay_log, "Input log.csv")->required();
  replay_cmd->add_option("--filter", replay_filters, "Filter variant(s) to compare");
  replay_cmd->add_option("--out", replay_out, "Output directory");

  auto* eval_cmd = app.add_subcommand("eval", "Compute metrics from an existing log");
  std::string eval_log, eval_out = "metrics.json";
  add_common(eval_cmd, eval_common);
  eval_cmd->add_option("--log", eval_log, "Input log.csv")->required();
  eval_cmd->add_option("--out", eval_out, "Output metrics JSON path");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim_cmd->parsed()) return cmd_simulate(sim_common, scenario_flag, filter_flag, sim_out);
    if (gen_cmd->parsed()) return cmd_gen_dataset(gen_common, backgrounds_flag, total_flag,
                                                  positives_flag, gen_out);
    if (replay_cmd->parsed()) return cmd_replay(replay_common, replay_log, replay_filters, replay_out);
    if (eval_cmd->parsed()) return cmd_eval(eval_common, eval_log, eval_out);
  } catch (const ptzloc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const ptzloc::SchemaMismatch& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ptzloc::NoBackgrounds& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const ptzloc::UnknownScenario& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
