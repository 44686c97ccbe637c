// Command-line front end: run experiments from JSON configs, sweep
// (eps, seed) grids, re-verify stored traces, and generate/inspect
// datasets. Exit codes: 0 success, 1 validation error, 2 runtime error.

#include <CLI11.hpp>
#include <iostream>

#include "aopt/harness.hpp"

namespace {

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const aopt::config_error& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const aopt::invalid_problem& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 1;
  } catch (const aopt::format_error& e) {
    std::cerr << "format error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive optimization experiment harness"};
  app.require_subcommand(1);

  std::string config_path, out_override;
  std::uint64_t seed_override = 0;
  bool has_seed = false;
  int jobs = 1;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "JSON experiment config")->required();
    cmd->add_option("--out", out_override, "output directory (overrides config)");
    cmd->add_option("--seed", seed_override, "base seed (overrides config)")
        ->each([&](const std::string&) { has_seed = true; });
    cmd->add_option("--jobs", jobs, "concurrent (config, seed) cells")->check(CLI::PositiveNumber);
  };

  auto* run_cmd = app.add_subcommand("run", "execute an experiment config");
  add_common(run_cmd);

  auto* sweep_cmd = app.add_subcommand("sweep", "run an (eps, seed) grid");
  add_common(sweep_cmd);

  auto* verify_cmd = app.add_subcommand("verify", "re-run analysis checks on a stored trace");
  std::string report_path = "report.json";
  verify_cmd->add_option("--config", config_path, "verify config JSON")->required();
  verify_cmd->add_option("--out", report_path, "report output path");

  auto* data_cmd = app.add_subcommand("data", "dataset utilities");
  data_cmd->require_subcommand(1);

  auto* gen_cmd = data_cmd->add_subcommand("gen", "generate a synthetic dataset CSV");
  std::string gen_out = "synthetic.csv";
  std::size_t gen_n = 10000;
  int gen_d = 50;
  double gen_margin = 2.0;
  std::uint64_t gen_seed = 1;
  gen_cmd->add_option("--out", gen_out, "output CSV path");
  gen_cmd->add_option("--n", gen_n, "number of samples");
  gen_cmd->add_option("--d", gen_d, "feature dimension");
  gen_cmd->add_option("--margin", gen_margin, "class separation");
  gen_cmd->add_option("--seed", gen_seed, "generator seed");

  auto* inspect_cmd = data_cmd->add_subcommand("inspect", "print dataset shape and label balance");
  std::string ins_csv, ins_label = "y", ins_images, ins_labels;
  inspect_cmd->add_option("--path", ins_csv, "CSV dataset path");
  inspect_cmd->add_option("--label", ins_label, "CSV label column");
  inspect_cmd->add_option("--images", ins_images, "IDX image file");
  inspect_cmd->add_option("--labels", ins_labels, "IDX label file");

  CLI11_PARSE(app, argc, argv);

  if (run_cmd->parsed() || sweep_cmd->parsed()) {
    return guarded([&] {
      auto cfg = aopt::ExperimentConfig::load(config_path);
      if (!out_override.empty()) cfg.out = out_override;
      if (has_seed) cfg.seed = seed_override;
      if (sweep_cmd->parsed() && cfg.kind != "sweep")
        throw aopt::config_error("sweep: config kind must be 'sweep'");
      int effective_jobs = jobs;
      if (cfg.raw.contains("jobs") && jobs == 1) effective_jobs = cfg.raw.at("jobs").get<int>();
      auto summary = aopt::run_experiment(cfg, effective_jobs);
      std::cout << summary.dump(2) << "\n";
    });
  }

  if (verify_cmd->parsed()) {
    return guarded([&] {
      std::ifstream in(config_path);
      if (!in) throw aopt::config_error(config_path + ": cannot open config");
      aopt::json vj;
      try {
        in >> vj;
      } catch (const aopt::json::exception& e) {
        throw aopt::config_error(config_path + ": JSON parse error: " + std::string(e.what()));
      }
      auto report = aopt::verify_stored_trace(vj);
      std::ofstream out(report_path);
      out << report.dump(2) << "\n";
      std::cout << report.dump(2) << "\n";
    });
  }

  if (gen_cmd->parsed()) {
    return guarded([&] {
      auto ds = aopt::gen_synthetic(gen_n, gen_d, gen_margin, gen_seed);
      aopt::save_csv(ds, gen_out);
      std::cout << "wrote " << gen_out << " (" << ds.size() << " x " << ds.feature_dim() << ")\n";
    });
  }

  if (inspect_cmd->parsed()) {
    return guarded([&] {
      aopt::Dataset ds;
      if (!ins_images.empty())
        ds = aopt::load_idx(ins_images, ins_labels);
      else if (!ins_csv.empty())
        ds = aopt::load_csv(ins_csv, ins_label);
      else
        throw aopt::config_error("data inspect: need --path or --images/--labels");
      std::size_t positives = 0;
      for (int y : ds.labels) positives += static_cast<std::size_t>(y);
      std::cout << "samples: " << ds.size() << "\nfeatures: " << ds.feature_dim()
                << "\npositives: " << positives << " ("
                << 100.0 * double(positives) / double(ds.size()) << "%)\n";
    });
  }

  return 0;
}
