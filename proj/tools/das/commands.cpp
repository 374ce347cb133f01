#include "das/commands.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "das/engine.hpp"
#include "das/error.hpp"
#include "das/io.hpp"
#include "das/parallel.hpp"
#include "das/synthetic.hpp"
#include "das/validate.hpp"
#include "json.hpp"

namespace das::cli {

namespace fs = std::filesystem;

namespace {

struct Loaded {
  std::optional<Run> run;
  int status = kOk;
};

int exit_code_for_load(const Error& e) {
  switch (e.code()) {
    case ErrorCode::Io: return kIo;
    default: return kValidation;
  }
}

// Parses and loads the whole run; parse failures are validation failures.
Loaded load(const CliConfig& config, std::ostream& err) {
  Loaded out;
  if (config.manifest.empty()) {
    err << "error: --manifest is required\n";
    out.status = kUsage;
    return out;
  }
  if (!fs::exists(config.manifest)) {
    err << "error: manifest " << config.manifest.string() << " not found\n";
    out.status = kIo;
    return out;
  }
  try {
    out.run = load_run(config.manifest);
  } catch (const Error& e) {
    err << "fatal: " << e.what() << '\n';
    out.status = exit_code_for_load(e);
  }
  return out;
}

bool report_findings(const std::vector<Finding>& findings, std::ostream& err) {
  for (const auto& f : findings) err << describe(f) << '\n';
  return has_fatal(findings);
}

int emit(const CliConfig& config, const std::string& text, std::ostream& out, std::ostream& err) {
  if (!config.out) {
    out << text;
    return kOk;
  }
  std::error_code ec;
  if (config.out->has_parent_path()) fs::create_directories(config.out->parent_path(), ec);
  std::ofstream file(*config.out, std::ios::binary | std::ios::trunc);
  if (!file || !(file << text)) {
    err << "error: cannot write " << config.out->string() << '\n';
    return kIo;
  }
  return kOk;
}

ScoreOptions score_options(const CliConfig& config) {
  ScoreOptions o;
  o.lambda = config.lambda;
  o.conf_thresh = config.conf_thresh;
  o.atc_thresholds = config.atc_thresholds;
  o.fd_mode = config.fd_mode;
  o.workers = config.workers;
  return o;
}

std::string render(const CliConfig& config, const ScoreReport& report) {
  return config.format == OutputFormat::table ? to_table(report) : to_json(report);
}

int score_like(const CliConfig& config, ScoreOptions options, ValidationScope scope, bool needs_truth,
               std::ostream& out, std::ostream& err) {
  auto loaded = load(config, err);
  if (!loaded.run) return loaded.status;
  const Run& run = *loaded.run;
  if (needs_truth && !run.ground_truth) {
    err << "error: manifest names no ground truth\n";
    return kMissingGroundTruth;
  }
  if (report_findings(validate_run(run, {config.conf_thresh, scope}), err)) return kValidation;

  ScoreReport report;
  try {
    report = score_run(run, options, needs_truth ? &*run.ground_truth : nullptr);
  } catch (const Error& e) {
    err << "scoring error: " << e.what() << '\n';
    return kScoring;
  }
  for (const auto& note : report.notes) {
    if (note.rfind("warning", 0) == 0) err << note << '\n';
  }
  return emit(config, render(config, report), out, err);
}

}  // namespace

int cmd_score(const CliConfig& config, std::ostream& out, std::ostream& err) {
  return score_like(config, score_options(config), ValidationScope::scoring, false, out, err);
}

int cmd_baselines(const CliConfig& config, std::ostream& out, std::ostream& err) {
  auto options = score_options(config);
  options.flatness_and_prototypes = false;
  options.baselines = true;
  return score_like(config, options, ValidationScope::baselines, false, out, err);
}

int cmd_corr(const CliConfig& config, std::ostream& out, std::ostream& err) {
  auto options = score_options(config);
  options.baselines = true;
  return score_like(config, options, ValidationScope::scoring, true, out, err);
}

int cmd_eval_map(const CliConfig& config, std::ostream& out, std::ostream& err) {
  auto loaded = load(config, err);
  if (!loaded.run) return loaded.status;
  const Run& run = *loaded.run;
  if (!run.ground_truth) {
    err << "error: manifest names no ground truth\n";
    return kMissingGroundTruth;
  }
  auto options = score_options(config);
  options.flatness_and_prototypes = false;
  ScoreReport report;
  try {
    report = score_run(run, options, &*run.ground_truth);
  } catch (const Error& e) {
    err << "evaluation error: " << e.what() << '\n';
    return e.code() == ErrorCode::NoGroundTruth ? kMissingGroundTruth : kScoring;
  }
  return emit(config, render(config, report), out, err);
}

int cmd_validate(const CliConfig& config, std::ostream& out, std::ostream& err) {
  if (config.manifest.empty()) {
    err << "error: --manifest is required\n";
    return kUsage;
  }
  if (!fs::exists(config.manifest)) {
    err << "error: manifest " << config.manifest.string() << " not found\n";
    return kIo;
  }
  std::vector<Finding> findings;
  try {
    findings = validate_run(parse_manifest(config.manifest), {config.conf_thresh, ValidationScope::scoring});
  } catch (const Error& e) {
    findings.push_back(Finding{Severity::fatal, "", e.what()});
  }
  const bool fatal = report_findings(findings, err);

  std::string text;
  if (config.format == OutputFormat::table) {
    text = fatal ? "run is not scoreable\n" : "run is scoreable\n";
  } else {
    nlohmann::ordered_json doc;
    doc["schema"] = "das-validation/1";
    doc["manifest"] = config.manifest.generic_string();
    doc["scoreable"] = !fatal;
    auto list = nlohmann::ordered_json::array();
    for (const auto& f : findings) {
      nlohmann::ordered_json node;
      node["severity"] = f.severity == Severity::fatal ? "fatal" : "warning";
      node["checkpoint"] = f.checkpoint_id;
      node["message"] = f.message;
      list.push_back(std::move(node));
    }
    doc["findings"] = std::move(list);
    text = doc.dump(2) + "\n";
  }
  const int written = emit(config, text, out, err);
  if (written != kOk) return written;
  return fatal ? kValidation : kOk;
}

int cmd_synth(const CliConfig& config, std::ostream& out, std::ostream& err) {
  if (!config.out) {
    err << "error: synth needs --out <directory>\n";
    return kUsage;
  }
  SyntheticConfig synth;
  try {
    if (config.synth_config) synth = load_synthetic_config(*config.synth_config);
    if (config.seed) synth.seed = *config.seed;
    synth.check();
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kUsage;
  }
  std::error_code ec;
  fs::create_directories(*config.out, ec);
  if (ec || !fs::is_directory(*config.out)) {
    err << "error: cannot create output directory " << config.out->string() << '\n';
    return kIo;
  }
  try {
    const auto manifest = write_synthetic_run(synth, *config.out);
    out << (*config.out / "manifest.json").generic_string() << '\n';
    if (synth.trajectory_length == 1) {
      err << "note: single-checkpoint run; scores will use degenerate normalization\n";
    }
    (void)manifest;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::Io ? kIo : kScoring;
  }
  return kOk;
}

int dispatch(const CliConfig& config, std::ostream& out, std::ostream& err) {
  switch (config.command) {
    case Command::score: return cmd_score(config, out, err);
    case Command::baselines: return cmd_baselines(config, out, err);
    case Command::eval_map: return cmd_eval_map(config, out, err);
    case Command::corr: return cmd_corr(config, out, err);
    case Command::synth: return cmd_synth(config, out, err);
    case Command::validate: return cmd_validate(config, out, err);
  }
  return kUsage;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Label-free checkpoint scoring for domain-adaptive object detection"};
  app.require_subcommand(1);

  CliConfig config;
  config.workers = worker_count_from_env();
  std::string format = "doc";
  std::string fd_mode = "full";
  std::string manifest;
  std::string out_path;
  std::string synth_config;
  std::uint64_t seed = 0;

  const std::map<std::string, OutputFormat> formats{{"doc", OutputFormat::doc}, {"table", OutputFormat::table}};

  auto add_common = [&](CLI::App* sub, bool scoring) {
    sub->add_option("--manifest", manifest, "Run manifest (JSON)")->required();
    sub->add_option("--out", out_path, "Write the document here instead of stdout");
    sub->add_option("--format", format, "Output format")->check(CLI::IsMember({"doc", "table"}));
    sub->add_option("--conf-thresh", config.conf_thresh, "Detection confidence filter")
        ->check(CLI::Range(0.0, 1.0));
    if (scoring) {
      sub->add_option("--lambda", config.lambda, "Weight of normalized PDR in DAS")->check(CLI::NonNegativeNumber);
      sub->add_option("--atc-thresholds", config.atc_thresholds, "ATC confidence thresholds")
          ->delimiter(',')
          ->expected(1, -1);
      sub->add_option("--fd-mode", fd_mode, "Frechet covariance estimator")
          ->check(CLI::IsMember({"full", "diagonal"}));
    }
  };

  auto* score = app.add_subcommand("score", "FIS, PDR, DAS and the selected checkpoint");
  add_common(score, true);
  auto* baselines = app.add_subcommand("baselines", "PS, ES, ATC and FD baselines");
  add_common(baselines, true);
  auto* eval_map = app.add_subcommand("eval-map", "mAP@0.5 per checkpoint (needs ground truth)");
  add_common(eval_map, false);
  auto* corr = app.add_subcommand("corr", "PCC of every metric vs mAP and the selection comparison");
  add_common(corr, true);
  auto* validate = app.add_subcommand("validate", "Check that a run is scoreable");
  add_common(validate, false);
  auto* synth = app.add_subcommand("synth", "Generate a synthetic run directory");
  synth->add_option("--config", synth_config, "Synthetic config (JSON)");
  synth->add_option("--out", out_path, "Output directory")->required();
  synth->add_option("--seed", seed, "Override the config seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << "error: " << e.what() << '\n';
    return kUsage;
  }

  if (*score) config.command = Command::score;
  if (*baselines) config.command = Command::baselines;
  if (*eval_map) config.command = Command::eval_map;
  if (*corr) config.command = Command::corr;
  if (*validate) config.command = Command::validate;
  if (*synth) config.command = Command::synth;

  if (config.conf_thresh >= 1.0) {
    err << "error: --conf-thresh must be in [0, 1)\n";
    return kUsage;
  }
  config.manifest = manifest;
  if (!out_path.empty()) config.out = out_path;
  if (!synth_config.empty()) config.synth_config = synth_config;
  if (synth->count("--seed") > 0) config.seed = seed;
  config.format = formats.at(format);
  config.fd_mode = fd_mode == "diagonal" ? FdMode::diagonal : FdMode::full;
  return dispatch(config, out, err);
}

}  // namespace das::cli
