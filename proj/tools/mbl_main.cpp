#include <cstdio>
#include <iostream>
#include <limits>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mbl/dataset.hpp"
#include "mbl/diagnostics.hpp"
#include "mbl/json_io.hpp"
#include "mbl/margins.hpp"
#include "mbl/runner.hpp"
#include "mbl/svg_plot.hpp"
#include "mbl/trainer.hpp"

namespace {

double parse_q(const std::string& text) {
  if (text == "inf") return std::numeric_limits<double>::infinity();
  return std::stod(text);
}

void print_files(const mbl::RunArtifacts& artifacts, const std::string& outdir) {
  for (const std::string& f : artifacts.files) std::cout << outdir << "/" << f << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"max-margin implicit-bias lab: adversarial training for linear classifiers"};
  app.require_subcommand(1);

  std::string outdir = "out";
  std::string config_path;
  std::string preset_name;
  long seed = 1;
  int jobs = 0;
  app.add_option("--out", outdir, "output directory")->capture_default_str();
  app.add_option("--jobs", jobs, "parallel workers (MBL_JOBS env as fallback)");
  app.add_option("--seed", seed, "seed for generated datasets");

  // margin: solve the max lq-margin (and optionally the robust mixed margin)
  auto* cmd_margin = app.add_subcommand("margin", "solve margin problems for a dataset");
  std::string margin_data = "paper-4pt";
  std::string margin_q = "2";
  double margin_c = 0.0;
  double margin_lambda = 0.0;
  cmd_margin->add_option("--data", margin_data, "builtin name or CSV path")->capture_default_str();
  cmd_margin->add_option("--q", margin_q, "perturbation exponent (number or 'inf')")
      ->capture_default_str();
  cmd_margin->add_option("--c", margin_c, "perturbation radius for the robust margin");
  cmd_margin->add_option("--smooth-lambda", margin_lambda,
                         "solve the smoothed variant with this lambda");

  auto* cmd_train = app.add_subcommand("train", "run a training config");
  cmd_train->add_option("--config", config_path, "RunConfig JSON")->required();

  auto* cmd_compare = app.add_subcommand("compare", "run a config plus the clean-GD baseline");
  cmd_compare->add_option("--config", config_path, "RunConfig JSON")->required();

  auto* cmd_verify = app.add_subcommand("verify", "run a config and check trace invariants");
  cmd_verify->add_option("--config", config_path, "RunConfig JSON")->required();

  auto* cmd_preset = app.add_subcommand("preset", "run a paper preset");
  cmd_preset->add_option("name", preset_name, "fig1a | fig1b | counterexample | landscape");
  cmd_preset->add_option("--preset", preset_name, "preset name (alias for the positional)");

  auto* cmd_sweep = app.add_subcommand("sweep", "sweep a base config over c or T");
  std::vector<double> sweep_c;
  std::vector<long> sweep_t;
  bool couple_rate = false;
  cmd_sweep->add_option("--config", config_path, "base RunConfig JSON")->required();
  cmd_sweep->add_option("--c-fracs", sweep_c, "fractions of gamma2 to sweep")->delimiter(',');
  cmd_sweep->add_option("--t-values", sweep_t, "iteration counts to sweep")->delimiter(',');
  cmd_sweep->add_flag("--couple-rate", couple_rate,
                      "couple c to T by the parameter-convergence schedule");

  auto* cmd_plot = app.add_subcommand("plot", "render trace columns as an SVG");
  std::string plot_csv, plot_out = "plot.svg", plot_x = "t";
  std::vector<std::string> plot_columns;
  bool plot_logx = false, plot_logy = false;
  cmd_plot->add_option("--csv", plot_csv, "input CSV")->required();
  cmd_plot->add_option("--columns", plot_columns, "columns to draw")->required()->delimiter(',');
  cmd_plot->add_option("--svg", plot_out, "output SVG path")->capture_default_str();
  cmd_plot->add_option("--x", plot_x, "x column")->capture_default_str();
  cmd_plot->add_flag("--logx", plot_logx, "log10 x axis");
  cmd_plot->add_flag("--logy", plot_logy, "log10 y axis");

  auto* cmd_gen = app.add_subcommand("generate", "emit a seeded separable dataset as CSV");
  std::size_t gen_n = 20, gen_d = 2;
  double gen_margin = 0.2;
  std::string gen_out = "dataset.csv";
  cmd_gen->add_option("--n", gen_n, "sample count")->capture_default_str();
  cmd_gen->add_option("--d", gen_d, "dimension")->capture_default_str();
  cmd_gen->add_option("--margin", gen_margin, "target ell_2 margin")->capture_default_str();
  cmd_gen->add_option("--csv", gen_out, "output path")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  const int workers = mbl::resolve_jobs(jobs);

  try {
    if (cmd_margin->parsed()) {
      const mbl::LabeledDataset ds = mbl::load_dataset(margin_data);
      const double q = parse_q(margin_q);
      nlohmann::json out;
      out["gamma_q"] = mbl::certificate_to_json(mbl::max_margin(ds, q));
      if (margin_lambda > 0.0) {
        out["mixed"] = mbl::certificate_to_json(mbl::robust_mixed_margin(
            ds, mbl::PerturbationModel::smoothed_linf(margin_c, margin_lambda)));
      } else if (margin_c > 0.0) {
        out["mixed"] = mbl::certificate_to_json(
            mbl::robust_mixed_margin(ds, mbl::PerturbationModel::lq_ball(q, margin_c)));
      }
      std::cout << out.dump(2) << "\n";
      return 0;
    }
    if (cmd_train->parsed() || cmd_compare->parsed() || cmd_verify->parsed()) {
      mbl::RunConfig config = mbl::load_run_config(config_path);
      if (cmd_compare->parsed()) config.with_baseline = true;
      const mbl::RunArtifacts artifacts = mbl::run_config(config, outdir);
      print_files(artifacts, outdir);
      if (cmd_verify->parsed()) {
        std::cout << (artifacts.verify_pass ? "verify: PASS" : "verify: FAIL") << "\n";
        return artifacts.verify_pass ? 0 : 1;
      }
      return 0;
    }
    if (cmd_preset->parsed()) {
      if (preset_name.empty())
        throw CLI::ValidationError("preset", "a preset name is required");
      const mbl::RunArtifacts artifacts = mbl::run_preset(preset_name, outdir, workers);
      print_files(artifacts, outdir);
      return 0;
    }
    if (cmd_sweep->parsed()) {
      const mbl::RunConfig base = mbl::load_run_config(config_path);
      mbl::SweepSpec spec;
      spec.c_fractions = sweep_c;
      spec.t_values = sweep_t;
      spec.couple_rate = couple_rate;
      const mbl::RunArtifacts artifacts = mbl::run_sweep(base, spec, outdir, workers);
      print_files(artifacts, outdir);
      return 0;
    }
    if (cmd_plot->parsed()) {
      mbl::PlotOptions options;
      options.x_column = plot_x;
      options.log_x = plot_logx;
      options.log_y = plot_logy;
      mbl::render_plot(plot_csv, plot_columns, plot_out, options);
      std::cout << plot_out << "\n";
      return 0;
    }
    if (cmd_gen->parsed()) {
      const mbl::LabeledDataset ds =
          mbl::generate_separable(static_cast<std::uint64_t>(seed), gen_n, gen_d, gen_margin);
      mbl::save_dataset_csv(ds, gen_out);
      std::cout << gen_out << "\n";
      return 0;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return 2;
  }
  return 0;
}
