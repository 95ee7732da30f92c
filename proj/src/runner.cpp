#include "mbl/runner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <future>
#include <iostream>
#include <stdexcept>

#include "mbl/csv.hpp"
#include "mbl/dataset.hpp"
#include "mbl/diagnostics.hpp"
#include "mbl/json_io.hpp"
#include "mbl/margins.hpp"
#include "mbl/svg_plot.hpp"
#include "mbl/vec.hpp"

namespace mbl {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

long default_log_every(long T) { return std::max<long>(1, T / 2000); }

void attach_heartbeat(TrainerConfig& cfg, const std::string& name) {
  if (cfg.T >= 100000)
    cfg.heartbeat = [name](long t) { std::fprintf(stderr, "[mbl] %s t=%ld\n", name.c_str(), t); };
}

void ensure_outdir(const std::string& outdir) {
  std::error_code ec;
  fs::create_directories(outdir, ec);
  if (ec || !fs::is_directory(outdir))
    throw std::runtime_error("runner: cannot create output directory '" + outdir + "'");
}

// Runs tasks on up to `jobs` worker threads; results keep input order.
template <typename T>
std::vector<T> run_parallel(std::vector<std::function<T()>> tasks, int jobs) {
  std::vector<T> results(tasks.size());
  if (jobs <= 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) results[i] = tasks[i]();
    return results;
  }
  std::size_t next = 0;
  while (next < tasks.size()) {
    const std::size_t batch = std::min<std::size_t>(jobs, tasks.size() - next);
    std::vector<std::future<T>> futs;
    futs.reserve(batch);
    for (std::size_t k = 0; k < batch; ++k)
      futs.push_back(std::async(std::launch::async, tasks[next + k]));
    for (std::size_t k = 0; k < batch; ++k) results[next + k] = futs[k].get();
    next += batch;
  }
  return results;
}

struct PreparedRun {
  LabeledDataset ds;
  PerturbationModel model = PerturbationModel::clean();
  StepSchedule schedule;
  TrainerConfig trainer;
  MarginCertificate cert2;
  std::optional<MarginCertificate> certq;
  std::optional<MixedMarginCertificate> mixed;
  double resolved_c = 0.0;
};

json schedule_to_json(const StepSchedule& s) {
  return json{{"mode", step_mode_name(s.mode)}, {"eta0", s.eta0}, {"eta", s.eta}};
}

json trace_tail_to_json(const TrainingTrace& trace) {
  const TraceRow& last = trace.last();
  json aligns = json::object();
  for (std::size_t k = 0; k < trace.alignment_labels.size(); ++k)
    aligns[trace.alignment_labels[k]] = last.alignments[k];
  return json{{"t", last.t},
              {"log10_adv_loss", last.log10_adv_loss},
              {"log10_clean_loss", last.log10_clean_loss},
              {"norm2", last.norm2},
              {"alignment_errors", aligns},
              {"grad_underflow", last.grad_underflow}};
}

void emit_plots(const std::string& outdir, const std::string& run_name,
                const TrainingTrace& trace, std::vector<std::string>& files) {
  const std::string csv = outdir + "/" + run_name + ".csv";
  PlotOptions loss_opts;
  loss_opts.title = run_name + " losses";
  render_plot(csv, {"log10_adv_loss", "log10_clean_loss"}, outdir + "/" + run_name + "_loss.svg",
              loss_opts);
  files.push_back(run_name + "_loss.svg");
  PlotOptions norm_opts;
  norm_opts.title = run_name + " norm growth";
  render_plot(csv, {"norm2"}, outdir + "/" + run_name + "_norm.svg", norm_opts);
  files.push_back(run_name + "_norm.svg");
  if (!trace.alignment_labels.empty()) {
    std::vector<std::string> cols;
    for (const std::string& label : trace.alignment_labels) cols.push_back("align_" + label);
    PlotOptions align_opts;
    align_opts.title = run_name + " alignment error";
    align_opts.log_y = true;
    render_plot(csv, cols, outdir + "/" + run_name + "_align.svg", align_opts);
    files.push_back(run_name + "_align.svg");
  }
}

}  // namespace

int resolve_jobs(int cli_jobs) {
  if (cli_jobs > 0) return cli_jobs;
  if (const char* env = std::getenv("MBL_JOBS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return 1;
}

RunConfig run_config_from_json(const json& j) {
  RunConfig config;
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  if (!j.contains("dataset") || !j.at("dataset").is_string())
    throw std::invalid_argument("config.dataset: required string (builtin name or CSV path)");
  config.dataset = j.at("dataset").get<std::string>();

  if (j.contains("model")) config.model = perturbation_from_json(j.at("model"));

  if (j.contains("schedule")) {
    const json& s = j.at("schedule");
    if (!s.is_object() || !s.contains("mode"))
      throw std::invalid_argument("config.schedule: expected {\"mode\": ...}");
    config.schedule_mode = step_mode_from_name(s.at("mode").get<std::string>());
    if (s.contains("eta")) config.eta = s.at("eta").get<double>();
    if (s.contains("eta0")) config.eta0 = s.at("eta0").get<double>();
    if (config.schedule_mode == StepMode::fixed && !config.eta.has_value())
      throw std::invalid_argument("config.schedule.eta: required for fixed mode");
  }

  if (!j.contains("T") || !j.at("T").is_number())
    throw std::invalid_argument("config.T: required iteration count");
  config.T = j.at("T").get<long>();
  if (config.T < 1) throw std::invalid_argument("config.T: must be >= 1");
  if (j.contains("log_every")) {
    config.log_every = j.at("log_every").get<long>();
    if (*config.log_every < 1) throw std::invalid_argument("config.log_every: must be >= 1");
  }

  if (j.contains("c_spec")) {
    const json& cs = j.at("c_spec");
    if (cs.is_number()) {
      config.c_spec.absolute = cs.get<double>();
    } else if (cs.is_object() && cs.contains("fraction")) {
      config.c_spec.fraction = cs.at("fraction").get<double>();
      if (cs.contains("of")) config.c_spec.of = cs.at("of").get<std::string>();
      if (config.c_spec.of != "gamma2" && config.c_spec.of != "gammaq")
        throw std::invalid_argument("config.c_spec.of: must be gamma2 or gammaq");
    } else {
      throw std::invalid_argument("config.c_spec: number or {fraction, of} object");
    }
  }

  if (j.contains("references")) {
    for (const json& r : j.at("references")) {
      if (r.is_string()) {
        const std::string name = r.get<std::string>();
        if (name != "u2" && name != "uq" && name != "u2q" && name != "u2lambda")
          throw std::invalid_argument("config.references: unknown reference '" + name + "'");
        config.references.push_back(name);
      } else if (r.is_object() && r.contains("label") && r.contains("u")) {
        ReferenceDirection ref;
        ref.label = r.at("label").get<std::string>();
        ref.u = r.at("u").get<std::vector<double>>();
        config.custom_references.push_back(std::move(ref));
      } else {
        throw std::invalid_argument("config.references: entries are names or {label, u}");
      }
    }
  }
  if (j.contains("with_baseline")) config.with_baseline = j.at("with_baseline").get<bool>();
  if (j.contains("name")) config.run_name = j.at("name").get<std::string>();
  return config;
}

RunConfig load_run_config(const std::string& path) {
  return run_config_from_json(read_json(path));
}

namespace {

PreparedRun prepare_run(const RunConfig& config) {
  PreparedRun run;
  run.ds = load_dataset(config.dataset);

  // Resolve the perturbation level before anything else.
  run.cert2 = max_margin(run.ds, 2.0);
  PerturbationModel model = config.model;
  if (config.c_spec.absolute.has_value() || config.c_spec.fraction.has_value()) {
    if (model.kind() == PerturbationKind::clean)
      throw std::invalid_argument("config.c_spec: meaningless for the clean model");
    double c = 0.0;
    if (config.c_spec.absolute.has_value()) {
      c = *config.c_spec.absolute;
    } else {
      double gamma = 0.0;
      if (config.c_spec.of == "gamma2") {
        gamma = run.cert2.gamma;
      } else {
        const double q = model.kind() == PerturbationKind::lq_ball
                             ? model.q()
                             : std::numeric_limits<double>::infinity();
        run.certq = max_margin(run.ds, q);
        gamma = run.certq->gamma;
      }
      if (gamma <= kSeparabilityTol)
        throw std::invalid_argument(
            "config.c_spec: margin-fraction requires linearly separable data");
      c = *config.c_spec.fraction * gamma;
    }
    model = model.kind() == PerturbationKind::lq_ball
                ? PerturbationModel::lq_ball(model.q(), c)
                : PerturbationModel::smoothed_linf(c, model.lambda());
  }
  run.model = model;
  run.resolved_c = model.c();

  if (model.kind() == PerturbationKind::lq_ball && model.q() != 2.0 && !run.certq.has_value())
    run.certq = max_margin(run.ds, model.q());
  if (!model.is_clean() || config.schedule_mode != StepMode::fixed)
    run.mixed = robust_mixed_margin(run.ds, model.is_clean()
                                                ? PerturbationModel::lq_ball(2.0, 0.0)
                                                : model);

  ScheduleCerts certs;
  const MarginCertificate& feas =
      (model.kind() == PerturbationKind::lq_ball && model.q() != 2.0) ? *run.certq : run.cert2;
  certs.margin_q = &feas;
  if (run.mixed.has_value()) certs.mixed = &*run.mixed;
  run.schedule =
      derive_step_schedule(run.ds, model, config.schedule_mode, certs, config.eta, config.eta0);

  run.trainer.model = model;
  run.trainer.schedule = run.schedule;
  run.trainer.T = config.T;
  run.trainer.log_every = config.log_every.value_or(default_log_every(config.T));
  attach_heartbeat(run.trainer, config.run_name);
  for (const std::string& name : config.references) {
    ReferenceDirection ref;
    ref.label = name;
    if (name == "u2") {
      ref.u = run.cert2.u;
    } else if (name == "uq") {
      if (!run.certq.has_value()) run.certq = max_margin(run.ds, model.is_clean() ? 2.0 : model.q());
      ref.u = vec::unit2(run.certq->u);  // ell_2-unit for alignment columns
    } else if (name == "u2q" || name == "u2lambda") {
      if (!run.mixed.has_value())
        throw std::invalid_argument("config.references: " + name +
                                    " needs a non-clean perturbation model");
      ref.u = run.mixed->u;
    }
    run.trainer.references.push_back(std::move(ref));
  }
  for (const ReferenceDirection& ref : config.custom_references)
    run.trainer.references.push_back(ref);
  return run;
}

}  // namespace

RunArtifacts run_config(const RunConfig& config, const std::string& outdir) {
  ensure_outdir(outdir);
  PreparedRun run = prepare_run(config);
  RunArtifacts artifacts;

  const TrainResult result = train(run.ds, run.trainer);
  const std::string trace_file = config.run_name + ".csv";
  write_trace_csv(result.trace, outdir + "/" + trace_file);
  artifacts.files.push_back(trace_file);

  json certs = json::object();
  certs["gamma2"] = certificate_to_json(run.cert2);
  if (run.certq.has_value()) certs["gammaq"] = certificate_to_json(*run.certq);
  if (run.mixed.has_value()) certs["mixed"] = certificate_to_json(*run.mixed);
  write_json(certs, outdir + "/" + config.run_name + "_certificates.json");
  artifacts.files.push_back(config.run_name + "_certificates.json");

  json summary{{"name", config.run_name},
               {"dataset", run.ds.name},
               {"model", perturbation_to_json(run.model)},
               {"resolved_c", run.resolved_c},
               {"schedule", schedule_to_json(run.schedule)},
               {"T", config.T},
               {"log_every", run.trainer.log_every},
               {"final", trace_tail_to_json(result.trace)}};

  if (run.mixed.has_value()) {
    InvariantInputs inputs;
    inputs.mixed = &*run.mixed;
    inputs.l2 = &run.cert2;
    const DiagnosticsConstants constants = alpha_and_K(run.ds, run.cert2);
    inputs.constants = &constants;
    inputs.schedule_guarantees = config.schedule_mode != StepMode::fixed;
    const InvariantReport report =
        check_trace_invariants(result.trace, run.ds, run.model, inputs);
    write_json(invariant_report_to_json(report), outdir + "/" + config.run_name + "_invariants.json");
    artifacts.files.push_back(config.run_name + "_invariants.json");
    artifacts.verify_pass = report.overall_pass;
    summary["invariants_pass"] = report.overall_pass;
  }

  if (config.with_baseline) {
    StepSchedule gd_schedule;
    gd_schedule.mode = StepMode::fixed;
    gd_schedule.eta0 = gd_schedule.eta = 1.0;  // the paper's clean-GD step
    const TrainResult gd = gd_baseline(run.ds, gd_schedule, config.T, run.trainer.log_every,
                                       run.trainer.references);
    const std::string gd_file = config.run_name + "_gd.csv";
    write_trace_csv(gd.trace, outdir + "/" + gd_file);
    artifacts.files.push_back(gd_file);
    summary["baseline_final"] = trace_tail_to_json(gd.trace);
    summary["gdat_final_norm_exceeds_gd"] = result.trace.last().norm2 > gd.trace.last().norm2;
    summary["gdat_final_clean_loss_below_gd"] =
        result.trace.last().log10_clean_loss < gd.trace.last().log10_clean_loss;
  }

  emit_plots(outdir, config.run_name, result.trace, artifacts.files);
  write_json(summary, outdir + "/" + config.run_name + "_summary.json");
  artifacts.files.push_back(config.run_name + "_summary.json");
  artifacts.summary = std::move(summary);
  return artifacts;
}

namespace {

RunArtifacts preset_fig1a(const std::string& outdir, int jobs) {
  const LabeledDataset ds = builtin_dataset("paper-4pt");
  const MarginCertificate cert2 = max_margin(ds, 2.0);
  const double c = 0.95 * cert2.gamma;
  const long T = 25000;
  const long log_every = default_log_every(T);
  const std::vector<ReferenceDirection> refs = {{"u2", cert2.u}};

  TrainerConfig gdat;
  gdat.model = PerturbationModel::lq_ball(2.0, c);
  gdat.schedule = {0.1, 0.1, StepMode::fixed};
  gdat.T = T;
  gdat.log_every = log_every;
  gdat.references = refs;

  StepSchedule gd_schedule{1.0, 1.0, StepMode::fixed};

  std::vector<std::function<TrainResult()>> tasks;
  tasks.push_back([&] { return train(ds, gdat); });
  tasks.push_back([&] { return gd_baseline(ds, gd_schedule, T, log_every, refs); });
  std::vector<TrainResult> results = run_parallel(std::move(tasks), jobs);
  const TrainResult& adv = results[0];
  const TrainResult& gd = results[1];

  RunArtifacts artifacts;
  write_trace_csv(adv.trace, outdir + "/fig1a_gdat.csv");
  write_trace_csv(gd.trace, outdir + "/fig1a_gd.csv");
  artifacts.files = {"fig1a_gdat.csv", "fig1a_gd.csv"};

  const MixedMarginCertificate mixed =
      robust_mixed_margin(ds, PerturbationModel::lq_ball(2.0, c));
  json certs{{"gamma2", certificate_to_json(cert2)}, {"mixed", certificate_to_json(mixed)}};
  write_json(certs, outdir + "/fig1a_certificates.json");
  artifacts.files.push_back("fig1a_certificates.json");

  InvariantInputs inputs;
  inputs.mixed = &mixed;
  inputs.l2 = &cert2;
  inputs.schedule_guarantees = false;  // hand-picked steps on unnormalized data
  const InvariantReport inv = check_trace_invariants(adv.trace, ds, gdat.model, inputs);
  write_json(invariant_report_to_json(inv), outdir + "/fig1a_invariants.json");
  artifacts.files.push_back("fig1a_invariants.json");
  artifacts.verify_pass = inv.overall_pass;

  // Orderings of the GDAT-dominates-GD comparison, evaluated honestly.
  long first_cross = -1;
  bool all_from_100 = true;
  for (std::size_t r = 0; r < adv.trace.rows.size(); ++r) {
    const TraceRow& ra = adv.trace.rows[r];
    const TraceRow& rg = gd.trace.rows[r];
    if (ra.t >= 100 && ra.log10_clean_loss > rg.log10_clean_loss) all_from_100 = false;
    if (first_cross < 0 && ra.t >= 1 && ra.log10_clean_loss <= rg.log10_clean_loss)
      first_cross = ra.t;
  }
  json summary{
      {"preset", "fig1a"},
      {"resolved_c", c},
      {"gdat_final", trace_tail_to_json(adv.trace)},
      {"gd_final", trace_tail_to_json(gd.trace)},
      {"clean_loss_dominates_from_t100", all_from_100},
      {"clean_loss_first_crossover_t", first_cross},
      {"norm_order_ok", adv.trace.last().norm2 > gd.trace.last().norm2},
      {"align_order_ok",
       adv.trace.last().alignments[0] < gd.trace.last().alignments[0]},
      {"invariants_pass", inv.overall_pass}};
  write_json(summary, outdir + "/fig1a_summary.json");
  artifacts.files.push_back("fig1a_summary.json");

  // Comparative plot: both clean losses in one frame.
  {
    CsvTable joint;
    joint.columns = {"t", "gdat_log10_clean", "gd_log10_clean", "gdat_norm2", "gd_norm2",
                     "gdat_align_u2", "gd_align_u2"};
    for (std::size_t r = 0; r < adv.trace.rows.size(); ++r) {
      const TraceRow& ra = adv.trace.rows[r];
      const TraceRow& rg = gd.trace.rows[r];
      joint.rows.push_back({static_cast<double>(ra.t), ra.log10_clean_loss, rg.log10_clean_loss,
                            ra.norm2, rg.norm2, ra.alignments[0], rg.alignments[0]});
    }
    write_csv(joint, outdir + "/fig1a_compare.csv");
    artifacts.files.push_back("fig1a_compare.csv");
    PlotOptions opts;
    opts.title = "fig1a clean loss: GDAT vs GD";
    render_plot(outdir + "/fig1a_compare.csv", {"gdat_log10_clean", "gd_log10_clean"},
                outdir + "/fig1a_loss.svg", opts);
    opts.title = "fig1a norm growth";
    render_plot(outdir + "/fig1a_compare.csv", {"gdat_norm2", "gd_norm2"},
                outdir + "/fig1a_norm.svg", opts);
    opts.title = "fig1a alignment error to u2";
    opts.log_y = true;
    render_plot(outdir + "/fig1a_compare.csv", {"gdat_align_u2", "gd_align_u2"},
                outdir + "/fig1a_align.svg", opts);
    artifacts.files.insert(artifacts.files.end(),
                           {"fig1a_loss.svg", "fig1a_norm.svg", "fig1a_align.svg"});
  }
  artifacts.summary = std::move(summary);
  return artifacts;
}

RunArtifacts preset_fig1b(const std::string& outdir, int jobs) {
  const LabeledDataset ds = builtin_dataset("paper-4pt");
  const double c = 0.5;
  const double lambda = 1e-4;
  const long T = 500000;
  const long log_every = default_log_every(T);

  const MixedMarginCertificate u2inf =
      robust_mixed_margin(ds, PerturbationModel::lq_ball(std::numeric_limits<double>::infinity(), c));
  const std::vector<ReferenceDirection> refs = {{"u2inf", u2inf.u}};

  auto make = [&](const PerturbationModel& model) {
    TrainerConfig cfg;
    cfg.model = model;
    cfg.schedule = {0.1, 0.1, StepMode::fixed};
    cfg.T = T;
    cfg.log_every = log_every;
    cfg.references = refs;
    return cfg;
  };
  const TrainerConfig cfg_q1000 = make(PerturbationModel::lq_ball(1000.0, c));
  const TrainerConfig cfg_linf =
      make(PerturbationModel::lq_ball(std::numeric_limits<double>::infinity(), c));
  const TrainerConfig cfg_smoothed = make(PerturbationModel::smoothed_linf(c, lambda));

  std::vector<std::function<TrainResult()>> tasks;
  tasks.push_back([&] { return train(ds, cfg_q1000); });
  tasks.push_back([&] { return train(ds, cfg_linf); });
  tasks.push_back([&] { return train(ds, cfg_smoothed); });
  std::vector<TrainResult> results = run_parallel(std::move(tasks), jobs);

  RunArtifacts artifacts;
  const char* names[] = {"fig1b_q1000", "fig1b_linf", "fig1b_smoothed"};
  for (std::size_t k = 0; k < results.size(); ++k) {
    write_trace_csv(results[k].trace, outdir + "/" + names[k] + std::string(".csv"));
    artifacts.files.push_back(names[k] + std::string(".csv"));
  }

  const std::vector<double> dir_q1000 = vec::unit2(results[0].theta);
  const std::vector<double> dir_linf = vec::unit2(results[1].theta);
  const std::vector<double> dir_smoothed = vec::unit2(results[2].theta);
  json summary{{"preset", "fig1b"},
               {"resolved_c", c},
               {"lambda", lambda},
               {"u2inf", u2inf.u},
               {"final_direction_q1000", dir_q1000},
               {"final_direction_linf", dir_linf},
               {"final_direction_smoothed", dir_smoothed},
               {"dir_distance_q1000_vs_linf", vec::dist2(dir_q1000, dir_linf)},
               {"dir_distance_linf_vs_smoothed", vec::dist2(dir_linf, dir_smoothed)}};
  write_json(summary, outdir + "/fig1b_summary.json");
  artifacts.files.push_back("fig1b_summary.json");

  CsvTable joint;
  joint.columns = {"t", "q1000_align", "linf_align", "smoothed_align"};
  for (std::size_t r = 0; r < results[0].trace.rows.size(); ++r)
    joint.rows.push_back({static_cast<double>(results[0].trace.rows[r].t),
                          results[0].trace.rows[r].alignments[0],
                          results[1].trace.rows[r].alignments[0],
                          results[2].trace.rows[r].alignments[0]});
  write_csv(joint, outdir + "/fig1b_compare.csv");
  artifacts.files.push_back("fig1b_compare.csv");
  PlotOptions opts;
  opts.title = "fig1b alignment error to u_{2,inf}";
  opts.log_y = true;
  render_plot(outdir + "/fig1b_compare.csv", {"q1000_align", "linf_align", "smoothed_align"},
              outdir + "/fig1b_align.svg", opts);
  artifacts.files.push_back("fig1b_align.svg");
  artifacts.summary = std::move(summary);
  return artifacts;
}

RunArtifacts preset_counterexample(const std::string& outdir, int jobs) {
  (void)jobs;  // single training run
  const LabeledDataset ds = builtin_dataset("paper-counterexample");
  const double c = 0.5;
  const double inf = std::numeric_limits<double>::infinity();
  const MarginCertificate cert2 = max_margin(ds, 2.0);
  const MarginCertificate certinf = max_margin(ds, inf);
  const MixedMarginCertificate ubar = robust_mixed_margin(ds, PerturbationModel::lq_ball(inf, c));

  TrainerConfig cfg;
  cfg.model = PerturbationModel::lq_ball(inf, c);
  cfg.schedule = {0.1, 0.1, StepMode::fixed};
  cfg.T = 1000000;
  cfg.log_every = default_log_every(cfg.T);
  cfg.references = {{"ubar", ubar.u},
                    {"u2", cert2.u},
                    {"uinf", vec::unit2(certinf.u)}};
  attach_heartbeat(cfg, "counterexample");
  const TrainResult result = train(ds, cfg);

  RunArtifacts artifacts;
  write_trace_csv(result.trace, outdir + "/counterexample.csv");
  artifacts.files.push_back("counterexample.csv");
  json certs{{"gamma2", certificate_to_json(cert2)},
             {"gammainf", certificate_to_json(certinf)},
             {"mixed", certificate_to_json(ubar)}};
  write_json(certs, outdir + "/counterexample_certificates.json");
  artifacts.files.push_back("counterexample_certificates.json");

  const TraceRow& last = result.trace.last();
  json summary{{"preset", "counterexample"},
               {"resolved_c", c},
               {"final_error_ubar", last.alignments[0]},
               {"final_error_u2", last.alignments[1]},
               {"final_error_uinf", last.alignments[2]},
               {"ubar_error_below_1e3", last.alignments[0] <= 1e-3}};
  write_json(summary, outdir + "/counterexample_summary.json");
  artifacts.files.push_back("counterexample_summary.json");

  PlotOptions opts;
  opts.title = "counterexample alignment errors";
  opts.log_y = true;
  render_plot(outdir + "/counterexample.csv", {"align_ubar", "align_u2", "align_uinf"},
              outdir + "/counterexample_align.svg", opts);
  artifacts.files.push_back("counterexample_align.svg");
  artifacts.summary = std::move(summary);
  return artifacts;
}

RunArtifacts preset_landscape(const std::string& outdir, int jobs) {
  (void)jobs;
  const LabeledDataset ds = builtin_dataset("paper-counterexample");
  const MarginCertificate cert2 = max_margin(ds, 2.0);
  const std::vector<double> rays = {1.0, 10.0, 100.0};
  const LandscapeReport sub = landscape_probe(ds, 2.0, 0.5 * cert2.gamma, rays);
  const LandscapeReport super = landscape_probe(ds, 2.0, 1.2 * cert2.gamma, rays);

  RunArtifacts artifacts;
  write_json(landscape_report_to_json(sub), outdir + "/landscape_subcritical.json");
  write_json(landscape_report_to_json(super), outdir + "/landscape_supercritical.json");
  artifacts.files = {"landscape_subcritical.json", "landscape_supercritical.json"};
  json summary{{"preset", "landscape"},
               {"gamma2", cert2.gamma},
               {"subcritical_strictly_decreasing",
                std::is_sorted(sub.ray_log_losses.rbegin(), sub.ray_log_losses.rend())},
               {"supercritical_converged", super.converged},
               {"supercritical_lambda_c", super.lambda_c},
               {"supercritical_kkt_residual", super.kkt_residual}};
  write_json(summary, outdir + "/landscape_summary.json");
  artifacts.files.push_back("landscape_summary.json");
  artifacts.summary = std::move(summary);
  return artifacts;
}

}  // namespace

RunArtifacts run_preset(const std::string& name, const std::string& outdir, int jobs) {
  ensure_outdir(outdir);
  if (name == "fig1a") return preset_fig1a(outdir, jobs);
  if (name == "fig1b") return preset_fig1b(outdir, jobs);
  if (name == "counterexample") return preset_counterexample(outdir, jobs);
  if (name == "landscape") return preset_landscape(outdir, jobs);
  throw std::invalid_argument("unknown preset '" + name +
                              "' (expected fig1a, fig1b, counterexample or landscape)");
}

RunArtifacts run_sweep(const RunConfig& base, const SweepSpec& spec, const std::string& outdir,
                       int jobs) {
  ensure_outdir(outdir);
  std::vector<RunConfig> variants;
  if (!spec.c_fractions.empty()) {
    for (double f : spec.c_fractions) {
      RunConfig v = base;
      v.c_spec.absolute.reset();
      v.c_spec.fraction = f;
      v.c_spec.of = "gamma2";
      v.run_name = base.run_name + "_c" + std::to_string(f);
      variants.push_back(std::move(v));
    }
  }
  if (!spec.t_values.empty()) {
    std::optional<double> gamma2, s_scale, npow;
    if (spec.couple_rate) {
      if (!base.eta.has_value())
        throw std::invalid_argument("sweep: rate coupling requires a fixed eta");
      const LabeledDataset ds = load_dataset(base.dataset);
      const MarginCertificate cert2 = max_margin(ds, 2.0);
      const DiagnosticsConstants constants = alpha_and_K(ds, cert2);
      if (!constants.alpha.has_value() || !(*constants.alpha > 0.0))
        throw std::invalid_argument("sweep: rate coupling needs alpha > 0");
      gamma2 = cert2.gamma;
      npow = std::pow(static_cast<double>(ds.n), 1.0 + 1.0 / *constants.alpha);
      const long tmin = *std::min_element(spec.t_values.begin(), spec.t_values.end());
      const double delta0 =
          std::sqrt(*npow * std::pow(std::log(double(tmin)), 2) / (*base.eta * double(tmin)));
      // Single ladder-wide scale keeping c(T_min) = gamma2/2; the literal
      // theorem constant pushes c below 0 on desk-scale ladders.
      s_scale = 0.5 * *gamma2 / delta0;
    }
    for (long t : spec.t_values) {
      RunConfig v = base;
      v.T = t;
      if (spec.couple_rate) {
        const double delta =
            std::sqrt(*npow * std::pow(std::log(double(t)), 2) / (*base.eta * double(t)));
        v.c_spec = CSpec{};
        v.c_spec.absolute = *gamma2 - *s_scale * delta;
      }
      v.run_name = base.run_name + "_T" + std::to_string(t);
      variants.push_back(std::move(v));
    }
  }
  if (variants.empty()) throw std::invalid_argument("sweep: nothing to sweep");

  std::vector<std::function<RunArtifacts()>> tasks;
  for (const RunConfig& v : variants)
    tasks.push_back([v, &outdir] { return run_config(v, outdir); });
  std::vector<RunArtifacts> results = run_parallel(std::move(tasks), jobs);

  RunArtifacts merged;
  json runs = json::array();
  for (std::size_t k = 0; k < results.size(); ++k) {
    runs.push_back(results[k].summary);
    merged.verify_pass = merged.verify_pass && results[k].verify_pass;
    for (const std::string& f : results[k].files) merged.files.push_back(f);
  }
  merged.summary = json{{"sweep", base.run_name}, {"runs", runs}};
  write_json(merged.summary, outdir + "/sweep_summary.json");
  merged.files.push_back("sweep_summary.json");
  return merged;
}

}  // namespace mbl
