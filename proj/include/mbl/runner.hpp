#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "mbl/perturbation.hpp"
#include "mbl/trainer.hpp"

namespace mbl {

// Fraction-of-margin perturbation level: c = fraction * gamma_<of>,
// resolved once up front against the margins module.
struct CSpec {
  std::optional<double> absolute;
  std::optional<double> fraction;
  std::string of = "gamma2";  // gamma2 | gammaq
};

struct RunConfig {
  std::string dataset;  // builtin name or CSV path
  PerturbationModel model = PerturbationModel::clean();
  StepMode schedule_mode = StepMode::fixed;
  std::optional<double> eta;
  std::optional<double> eta0;
  long T = 1;
  std::optional<long> log_every;  // default max(1, T/2000)
  CSpec c_spec;
  std::vector<std::string> references;  // u2 | uq | u2q | u2lambda
  std::vector<ReferenceDirection> custom_references;
  bool with_baseline = false;  // also run clean GD for comparison
  std::string run_name = "run";
};

// Schema-validated parse; errors name the offending field.
RunConfig run_config_from_json(const nlohmann::json& j);
RunConfig load_run_config(const std::string& path);

struct RunArtifacts {
  std::vector<std::string> files;       // everything written, relative to outdir
  nlohmann::json summary;
  bool verify_pass = true;              // hard invariant checks
};

// Executes a config: resolves c, derives/validates the schedule, trains,
// emits trace CSV + certificate/report JSON + SVG plots into outdir.
RunArtifacts run_config(const RunConfig& config, const std::string& outdir);

// Presets reproducing the linear-classifier experiments:
// fig1a | fig1b | counterexample | landscape.
RunArtifacts run_preset(const std::string& name, const std::string& outdir, int jobs = 1);

// Config sweep over perturbation levels and/or horizon ladders; runs execute
// in parallel worker tasks (jobs > 1) and a merged summary is written last.
struct SweepSpec {
  std::vector<double> c_fractions;  // of gamma2
  std::vector<long> t_values;
  bool couple_rate = false;  // gamma2 - c = s*sqrt(n^(1+1/alpha) log^2 T/(eta T))
};
RunArtifacts run_sweep(const RunConfig& base, const SweepSpec& spec, const std::string& outdir,
                       int jobs = 1);

int resolve_jobs(int cli_jobs);  // falls back to MBL_JOBS, then 1

}  // namespace mbl
