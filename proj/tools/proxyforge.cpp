// proxyforge: construct and evaluate Pareto-optimal proxy metrics from
// per-bucket A/B-experiment data.
//
// Subcommands: validate, sensitivity, evaluate, optimize, score, simulate,
// aupf, plot-data. Every JSON artifact embeds the tool version, the fully
// resolved configuration (defaults included), the seed and input-file
// digests, so a run can be reproduced from its output alone. Files are
// written atomically (temp file + rename). Exit codes: 0 success,
// 1 validation/data errors, 2 usage errors.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "proxyforge/data_model.hpp"
#include "proxyforge/digest.hpp"
#include "proxyforge/pareto.hpp"
#include "proxyforge/proxy.hpp"
#include "proxyforge/scoring.hpp"
#include "proxyforge/simulator.hpp"
#include "proxyforge/stats.hpp"
#include "proxyforge/version.hpp"

namespace pf = proxyforge;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int resolve_threads(int flag_value) {
  if (flag_value > 0) return flag_value;
  if (const char* env = std::getenv("PROXYFORGE_THREADS")) {
    const int parsed = std::atoi(env);
    if (parsed > 0) return parsed;
  }
  return pf::resolve_thread_count(0);
}

// Input digests identify reproducible content: timing fields inside JSON
// artifacts are normalized away before hashing, so re-running a pipeline
// yields identical digests all the way down.
std::string input_digest(const fs::path& path) {
  if (path.extension() != ".json") return pf::file_digest(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) pf::fail(pf::Errc::bad_file, "cannot open '" + path.string() + "' for digest");
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  static const std::regex timing("\"wall_time_ms\": [0-9.eE+-]+");
  content = std::regex_replace(content, timing, "\"wall_time_ms\": 0");
  return pf::digest_hex(pf::fnv1a64(content));
}

json envelope(const std::string& command, const json& config,
              const std::vector<fs::path>& inputs) {
  json out;
  out["tool"] = pf::k_tool_name;
  out["version"] = pf::k_tool_version;
  out["command"] = command;
  out["config"] = config;
  json digests = json::object();
  for (const auto& path : inputs) {
    digests[path.string()] = input_digest(path);
  }
  out["inputs"] = digests;
  return out;
}

void emit(const json& doc, const std::string& out_path) {
  const std::string text = doc.dump(2) + "\n";
  if (!out_path.empty()) {
    pf::write_file_atomic(out_path, text);
  }
  std::cout << text;
}

void emit_text(const std::string& text, const std::string& out_path) {
  if (!out_path.empty()) {
    pf::write_file_atomic(out_path, text);
  } else {
    std::cout << text;
  }
}

json issues_to_json(const std::vector<pf::ValidationIssue>& issues) {
  json arr = json::array();
  for (const auto& issue : issues) {
    arr.push_back({{"code", issue.code},
                   {"experiment_id", issue.experiment_id},
                   {"metric_id", issue.metric_id},
                   {"message", issue.message}});
  }
  return arr;
}

pf::ObjectiveConfig parse_objectives(const std::string& spec, double alpha,
                                     std::optional<double> clamp_multiplier) {
  pf::ObjectiveConfig cfg;
  cfg.alpha = alpha;
  if (clamp_multiplier) cfg.clamp = pf::IqrClamp{*clamp_multiplier};
  if (spec == "bs-corr") {
    cfg.kind = {pf::SensitivityKind::binary, pf::DirectionalityKind::pearson};
  } else if (spec == "as-negmse") {
    cfg.kind = {pf::SensitivityKind::average, pf::DirectionalityKind::neg_mse};
  } else if (spec == "bs-spearman") {
    cfg.kind = {pf::SensitivityKind::binary, pf::DirectionalityKind::spearman};
  } else {
    pf::fail(pf::Errc::invalid_config,
             "unknown objectives '" + spec + "' (use bs-corr, as-negmse or bs-spearman)");
  }
  return cfg;
}

json weights_to_json(const pf::ExperimentPanel& panel, const Eigen::VectorXd& weights) {
  json out = json::object();
  for (Eigen::Index m = 0; m < weights.size(); ++m) {
    out[panel.metric_ids[static_cast<std::size_t>(m)]] = weights(m);
  }
  return out;
}

pf::WeightVector weights_from_json_file(const fs::path& path, const pf::ExperimentPanel& panel) {
  std::ifstream in(path);
  if (!in) pf::fail(pf::Errc::bad_file, "cannot open '" + path.string() + "'");
  json doc = json::parse(in, nullptr, true, true);
  if (doc.contains("weights")) doc = doc["weights"];
  Eigen::VectorXd w = Eigen::VectorXd::Zero(panel.n_metrics());
  if (doc.is_array()) {
    if (static_cast<Eigen::Index>(doc.size()) != panel.n_metrics()) {
      pf::fail(pf::Errc::dimension_mismatch, "weight array length does not match the panel");
    }
    for (Eigen::Index m = 0; m < panel.n_metrics(); ++m) {
      w(m) = doc[static_cast<std::size_t>(m)].get<double>();
    }
  } else if (doc.is_object()) {
    for (const auto& [key, value] : doc.items()) {
      w(panel.metric_index(key)) = value.get<double>();
    }
  } else {
    pf::fail(pf::Errc::bad_file, "weights file must hold an array or a {metric_id: weight} map");
  }
  if ((w.array() < 0.0).any()) {
    pf::fail(pf::Errc::invalid_config, "weights must be nonnegative");
  }
  return pf::WeightVector(std::move(w));
}

json result_to_json(const pf::ExperimentPanel& panel, const pf::ParetoResult& result) {
  json entries = json::array();
  for (const auto& entry : result.entries) {
    entries.push_back({{"weights", weights_to_json(panel, entry.weights.values)},
                       {"sensitivity", entry.point.sensitivity},
                       {"directionality", entry.point.directionality}});
  }
  json out;
  out["objectives"] = pf::to_string(result.kind);
  out["entries"] = entries;
  out["evaluations"] = result.evaluations;
  out["wall_time_ms"] = result.wall_time_ms;
  out["infeasible_bins"] = result.infeasible_bins;
  if (result.bin_edges.size() > 0) {
    out["bin_edges"] = std::vector<double>(result.bin_edges.data(),
                                           result.bin_edges.data() + result.bin_edges.size());
  }
  return out;
}

std::string front_to_csv(const json& front, const std::vector<std::string>& metric_ids) {
  std::string csv = "sensitivity,directionality";
  for (const auto& id : metric_ids) csv += ",weight_" + id;
  csv += '\n';
  for (const auto& entry : front.at("entries")) {
    csv += pf::format_double(entry.at("sensitivity").get<double>());
    csv += ',';
    csv += pf::format_double(entry.at("directionality").get<double>());
    for (const auto& id : metric_ids) {
      csv += ',';
      csv += pf::format_double(entry.at("weights").value(id, 0.0));
    }
    csv += '\n';
  }
  return csv;
}

json score_report_to_json(const pf::ScoreReport& report) {
  json out;
  out["total"] = report.total;
  out["detections"] = report.detections;
  out["mistakes"] = report.mistakes;
  out["ns_significant"] = report.ns_significant;
  out["binary_sensitivity_proxy"] = report.binary_sensitivity_proxy;
  out["proxy_score"] = report.proxy_score ? json(*report.proxy_score) : json(nullptr);
  out["recall"] = report.recall ? json(*report.recall) : json(nullptr);
  out["precision"] = report.precision ? json(*report.precision) : json(nullptr);
  json table = json::array();
  for (int p = -1; p <= 1; ++p) {
    json row = json::array();
    for (int n = -1; n <= 1; ++n) {
      row.push_back(report.table[static_cast<std::size_t>(p + 1)][static_cast<std::size_t>(n + 1)]);
    }
    table.push_back(row);
  }
  out["contingency"] = table;  // rows: proxy -1/0/+1, cols: north star -1/0/+1
  return out;
}

struct CommonFlags {
  std::string data;
  std::string registry;
  double alpha = 0.05;
  std::optional<double> clamp;
  int threads = 0;
  std::string format = "json";
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_data = true) {
  auto* data = cmd->add_option("--data", flags.data, "panel CSV (arm-level or delta-level)");
  auto* reg = cmd->add_option("--registry", flags.registry, "metric registry CSV");
  if (needs_data) {
    data->required();
    reg->required();
  }
  cmd->add_option("--alpha", flags.alpha, "two-sided significance level")
      ->check(CLI::Range(1e-6, 0.999999))
      ->capture_default_str();
  cmd->add_option("--iqr-clamp", flags.clamp,
                  "clamp |t| above Q3 + multiplier*IQR in average sensitivity");
  cmd->add_option("--threads", flags.threads,
                  "worker threads (default: PROXYFORGE_THREADS or machine parallelism)");
  cmd->add_option("--format", flags.format, "output format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

// The worker thread count is deliberately not echoed: results are invariant
// to it, and artifacts from runs that differ only in parallelism must be
// byte-identical.
json common_config(const CommonFlags& flags) {
  json cfg;
  cfg["data"] = flags.data;
  cfg["registry"] = flags.registry;
  cfg["alpha"] = flags.alpha;
  cfg["iqr_clamp"] = flags.clamp ? json(*flags.clamp) : json(nullptr);
  cfg["format"] = flags.format;
  return cfg;
}

// ---------------------------------------------------------------------------

int run_validate(const CommonFlags& flags, const std::string& out_path) {
  pf::ValidationReport report;
  auto panel = pf::load_panel_collect(flags.data, flags.registry, report);
  if (panel) {
    const auto semantic = pf::validate_panel(*panel);
    report.errors.insert(report.errors.end(), semantic.errors.begin(), semantic.errors.end());
    report.warnings.insert(report.warnings.end(), semantic.warnings.begin(),
                           semantic.warnings.end());
  }
  json doc = envelope("validate", common_config(flags), {flags.data, flags.registry});
  doc["errors"] = issues_to_json(report.errors);
  doc["warnings"] = issues_to_json(report.warnings);
  doc["panel_shape"] = {report.panel_shape[0], report.panel_shape[1], report.panel_shape[2]};
  doc["ok"] = report.ok();
  emit(doc, out_path);
  return report.ok() ? 0 : 1;
}

int run_sensitivity(const CommonFlags& flags, const std::string& out_path) {
  const auto panel = pf::load_panel(flags.data, flags.registry);
  pf::SensitivityConfig cfg{flags.alpha, std::nullopt};
  if (flags.clamp) cfg.clamp = pf::IqrClamp{*flags.clamp};
  const auto rows = pf::sensitivity_report(panel, cfg);

  if (flags.format == "csv") {
    std::string csv = "metric_id,binary_sensitivity,average_sensitivity,correlation,mse\n";
    for (const auto& row : rows) {
      csv += row.metric_id + ',' + pf::format_double(row.binary_sensitivity) + ',' +
             pf::format_double(row.average_sensitivity) + ',' +
             pf::format_double(row.correlation) + ',' + pf::format_double(row.mse) + '\n';
    }
    emit_text(csv, out_path);
    return 0;
  }
  json doc = envelope("sensitivity", common_config(flags), {flags.data, flags.registry});
  json metrics = json::array();
  for (const auto& row : rows) {
    metrics.push_back({{"metric_id", row.metric_id},
                       {"binary_sensitivity", row.binary_sensitivity},
                       {"average_sensitivity", row.average_sensitivity},
                       {"correlation", row.correlation},
                       {"mse", row.mse}});
  }
  doc["metrics"] = metrics;
  emit(doc, out_path);
  return 0;
}

int run_evaluate(const CommonFlags& flags, const std::string& weights_path,
                 const std::string& objectives, const std::string& out_path) {
  const auto panel = pf::load_panel(flags.data, flags.registry);
  const auto w = weights_from_json_file(weights_path, panel);
  const auto cfg = parse_objectives(objectives, flags.alpha, flags.clamp);
  const pf::ObjectiveEvaluator evaluator(panel, cfg);
  const auto point = evaluator.evaluate(w);
  const auto stats = evaluator.experiment_stats(w);

  json doc = envelope("evaluate", common_config(flags), {flags.data, flags.registry, weights_path});
  doc["config"]["objectives"] = objectives;
  doc["weights"] = weights_to_json(panel, w.values);
  doc["objective_point"] = {{"sensitivity", point.sensitivity},
                            {"directionality", point.directionality},
                            {"kind", pf::to_string(point.kind)}};
  json per_exp = json::array();
  std::size_t t_index = 0;
  for (Eigen::Index j = 0; j < panel.n_experiments(); ++j) {
    json row;
    row["experiment_id"] = panel.experiment_ids[static_cast<std::size_t>(j)];
    row["mean"] = stats.zbar(j);
    row["se"] = stats.se(j);
    if (stats.se(j) > 0.0) {
      row["t"] = stats.t(static_cast<Eigen::Index>(t_index++));
    } else {
      row["t"] = nullptr;
    }
    per_exp.push_back(row);
  }
  doc["per_experiment"] = per_exp;
  emit(doc, out_path);
  return 0;
}

int run_optimize(const CommonFlags& flags, const std::string& algorithm,
                 const std::string& metrics_csv, std::int64_t iterations, int bins,
                 std::uint64_t seed, const std::string& objectives, const std::string& out_path,
                 const std::string& csv_path) {
  auto panel = pf::load_panel(flags.data, flags.registry);
  if (!metrics_csv.empty()) {
    std::vector<std::string> subset;
    std::string token;
    for (char c : metrics_csv + ",") {
      if (c == ',') {
        if (!token.empty()) subset.push_back(token);
        token.clear();
      } else {
        token.push_back(c);
      }
    }
    panel = panel.select_metrics(subset);
  }
  const auto cfg = parse_objectives(objectives, flags.alpha, flags.clamp);
  const pf::ObjectiveEvaluator evaluator(panel, cfg);
  const int threads = resolve_threads(flags.threads);

  pf::ParetoResult result;
  if (algorithm == "random") {
    const std::int64_t budget =
        iterations > 0 ? iterations : 4000 * static_cast<std::int64_t>(panel.n_metrics());
    result = pf::random_search(evaluator, pf::SearchBudget{budget, seed}, threads);
  } else if (algorithm == "binned") {
    const std::int64_t per_bin = iterations > 0 ? iterations : 4000;
    const auto spec = pf::default_bin_spec(evaluator, bins);
    result = pf::binned_search(evaluator, spec, per_bin, threads);
  } else {
    pf::fail(pf::Errc::invalid_config, "unknown algorithm '" + algorithm + "'");
  }

  json doc = envelope("optimize", common_config(flags), {flags.data, flags.registry});
  doc["config"]["algorithm"] = algorithm;
  doc["config"]["objectives"] = objectives;
  doc["config"]["iterations"] = iterations;
  doc["config"]["bins"] = bins;
  doc["config"]["seed"] = seed;
  doc["config"]["metrics"] = metrics_csv;
  doc["result"] = result_to_json(panel, result);
  doc["result"]["aupf"] = cfg.kind.directionality == pf::DirectionalityKind::neg_mse
                              ? json(nullptr)
                              : json(pf::aupf(result));
  doc["metric_ids"] = panel.metric_ids;
  emit(doc, out_path);
  if (!csv_path.empty()) {
    pf::write_file_atomic(csv_path, front_to_csv(doc["result"], panel.metric_ids));
  }
  return 0;
}

int run_score(const CommonFlags& flags, const std::string& weights_path,
              const std::string& front_path, const std::string& entry_spec,
              const std::string& out_path, const std::string& table_path) {
  const auto panel = pf::load_panel(flags.data, flags.registry);
  pf::SensitivityConfig cfg{flags.alpha, std::nullopt};

  pf::WeightVector w;
  json selection;
  std::vector<fs::path> inputs{flags.data, flags.registry};
  if (!weights_path.empty()) {
    w = weights_from_json_file(weights_path, panel);
    selection = {{"weights_file", weights_path}};
    inputs.push_back(weights_path);
  } else if (!front_path.empty()) {
    std::ifstream in(front_path);
    if (!in) pf::fail(pf::Errc::bad_file, "cannot open '" + front_path + "'");
    const json front_doc = json::parse(in);
    const json& entries = front_doc.at("result").at("entries");
    if (entries.empty()) pf::fail(pf::Errc::empty_input, "front has no entries");
    std::size_t chosen = 0;
    if (entry_spec == "best-score") {
      double best = -2.0;
      for (std::size_t i = 0; i < entries.size(); ++i) {
        Eigen::VectorXd cand = Eigen::VectorXd::Zero(panel.n_metrics());
        for (const auto& [key, value] : entries[i].at("weights").items()) {
          cand(panel.metric_index(key)) = value.get<double>();
        }
        const auto report = pf::score_weights(panel, pf::WeightVector(cand), cfg);
        const double s = report.proxy_score.value_or(-2.0);
        if (s > best) {
          best = s;
          chosen = i;
        }
      }
    } else {
      chosen = static_cast<std::size_t>(std::stoul(entry_spec));
      if (chosen >= entries.size()) {
        pf::fail(pf::Errc::invalid_config, "entry index out of range");
      }
    }
    Eigen::VectorXd values = Eigen::VectorXd::Zero(panel.n_metrics());
    for (const auto& [key, value] : entries[chosen].at("weights").items()) {
      values(panel.metric_index(key)) = value.get<double>();
    }
    w = pf::WeightVector(values);
    selection = {{"front_file", front_path}, {"entry", chosen}};
    inputs.push_back(front_path);
  } else {
    pf::fail(pf::Errc::invalid_config, "score needs --weights or --front");
  }

  const auto labels = pf::classify_panel(panel, w, cfg);
  const auto report = pf::score(labels);
  Eigen::VectorXd y_means(panel.n_experiments());
  for (Eigen::Index j = 0; j < panel.n_experiments(); ++j) y_means(j) = panel.Y.col(j).mean();
  const auto breakdown = pf::neutral_ns_breakdown(labels, y_means);

  json doc = envelope("score", common_config(flags), inputs);
  doc["selection"] = selection;
  doc["weights"] = weights_to_json(panel, w.values);
  doc["report"] = score_report_to_json(report);
  json neutral;
  const char* names[3] = {"proxy_negative", "proxy_neutral", "proxy_positive"};
  for (int g = 0; g < 3; ++g) {
    neutral[names[g]] = {
        {"count", breakdown.count_by_direction[static_cast<std::size_t>(g)]},
        {"mean_ns_effect", breakdown.mean_by_direction[static_cast<std::size_t>(g)]
                               ? json(*breakdown.mean_by_direction[static_cast<std::size_t>(g)])
                               : json(nullptr)}};
  }
  doc["neutral_ns_breakdown"] = neutral;
  emit(doc, out_path);

  if (!table_path.empty()) {
    std::string csv = "proxy_direction,ns_negative,ns_neutral,ns_positive\n";
    for (int p = -1; p <= 1; ++p) {
      csv += std::to_string(p);
      for (int n = -1; n <= 1; ++n) {
        csv += ',' + std::to_string(report.table[static_cast<std::size_t>(p + 1)]
                                                [static_cast<std::size_t>(n + 1)]);
      }
      csv += '\n';
    }
    pf::write_file_atomic(table_path, csv);
  }
  return 0;
}

int run_simulate(const std::string& preset_name, Eigen::Index J, Eigen::Index N, Eigen::Index M,
                 std::uint64_t seed, int threads, const std::string& out_path,
                 const std::string& truth_path, const std::string& registry_path) {
  auto cfg = pf::preset(preset_name, J, N, M);
  cfg.seed = seed;
  const auto [panel, truth] = pf::simulate_panel(cfg, resolve_threads(threads));
  pf::write_file_atomic(out_path, pf::panel_to_delta_csv(panel));
  if (!truth_path.empty()) {
    pf::write_file_atomic(truth_path, pf::ground_truth_to_csv(truth, panel));
  }
  const std::string reg_path =
      registry_path.empty() ? out_path + ".registry.csv" : registry_path;
  pf::write_file_atomic(reg_path, panel.registry.to_csv());

  json doc;
  doc["tool"] = pf::k_tool_name;
  doc["version"] = pf::k_tool_version;
  doc["command"] = "simulate";
  doc["config"] = {{"preset", preset_name}, {"J", J},    {"N", N},
                   {"M", M},                {"seed", seed}};
  doc["outputs"] = {{"panel", out_path}, {"registry", reg_path}};
  if (!truth_path.empty()) doc["outputs"]["truth"] = truth_path;
  doc["panel_digest"] = pf::file_digest(out_path);
  std::cout << doc.dump(2) << "\n";
  return 0;
}

int run_aupf(const std::string& front_path, const std::string& out_path) {
  std::ifstream in(front_path);
  if (!in) pf::fail(pf::Errc::bad_file, "cannot open '" + front_path + "'");
  const json front_doc = json::parse(in);
  pf::ParetoResult result;
  const std::string kind = front_doc.at("result").value("objectives", "bs-corr");
  if (kind != "bs-corr" && kind != "bs-spearman") {
    pf::fail(pf::Errc::point_below_reference,
             "AUPF with the origin reference needs sensitivity/correlation objectives");
  }
  for (const auto& entry : front_doc.at("result").at("entries")) {
    pf::ArchiveEntry e;
    e.point.sensitivity = entry.at("sensitivity").get<double>();
    e.point.directionality = entry.at("directionality").get<double>();
    if (kind == "bs-spearman") {
      e.point.kind = {pf::SensitivityKind::binary, pf::DirectionalityKind::spearman};
    }
    result.kind = e.point.kind;
    result.entries.push_back(std::move(e));
  }
  json doc;
  doc["tool"] = pf::k_tool_name;
  doc["version"] = pf::k_tool_version;
  doc["command"] = "aupf";
  doc["front"] = front_path;
  doc["aupf"] = pf::aupf(result);
  emit(doc, out_path);
  return 0;
}

int run_plot_data(const std::string& front_path, const std::string& report_path,
                  const std::string& out_path) {
  if (!front_path.empty()) {
    std::ifstream in(front_path);
    if (!in) pf::fail(pf::Errc::bad_file, "cannot open '" + front_path + "'");
    const json doc = json::parse(in);
    const std::vector<std::string> metric_ids = doc.at("metric_ids");
    emit_text(front_to_csv(doc.at("result"), metric_ids), out_path);
    return 0;
  }
  if (!report_path.empty()) {
    std::ifstream in(report_path);
    if (!in) pf::fail(pf::Errc::bad_file, "cannot open '" + report_path + "'");
    const json doc = json::parse(in);
    std::string csv = "metric_id,binary_sensitivity,correlation\n";
    for (const auto& row : doc.at("metrics")) {
      csv += row.at("metric_id").get<std::string>() + ',' +
             pf::format_double(row.at("binary_sensitivity").get<double>()) + ',' +
             pf::format_double(row.at("correlation").get<double>()) + '\n';
    }
    emit_text(csv, out_path);
    return 0;
  }
  pf::fail(pf::Errc::invalid_config, "plot-data needs --front or --report");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pareto-optimal proxy metrics for A/B experiment panels"};
  app.require_subcommand(1);

  // validate
  CommonFlags validate_flags;
  std::string validate_out;
  auto* validate_cmd = app.add_subcommand("validate", "check a panel file against its registry");
  add_common(validate_cmd, validate_flags);
  validate_cmd->add_option("--out", validate_out, "write the report JSON here");

  // sensitivity
  CommonFlags sens_flags;
  sens_flags.format = "csv";
  std::string sens_out;
  auto* sens_cmd =
      app.add_subcommand("sensitivity", "per-metric sensitivity and directionality report");
  add_common(sens_cmd, sens_flags);
  sens_cmd->add_option("--out", sens_out, "write the report here");

  // evaluate
  CommonFlags eval_flags;
  std::string eval_weights, eval_objectives = "bs-corr", eval_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "objectives of one weight vector");
  add_common(eval_cmd, eval_flags);
  eval_cmd->add_option("--weights", eval_weights, "weights JSON file")->required();
  eval_cmd->add_option("--objectives", eval_objectives, "bs-corr | as-negmse | bs-spearman")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval_out, "write the evaluation JSON here");

  // optimize
  CommonFlags opt_flags;
  std::string opt_algorithm = "binned", opt_metrics, opt_objectives = "bs-corr";
  std::string opt_out, opt_csv;
  std::int64_t opt_iterations = 0;
  int opt_bins = 14;
  std::uint64_t opt_seed = 0;
  auto* opt_cmd = app.add_subcommand("optimize", "extract a Pareto front of proxy weights");
  add_common(opt_cmd, opt_flags);
  opt_cmd->add_option("--algorithm", opt_algorithm, "random | binned")
      ->check(CLI::IsMember({"random", "binned"}))
      ->capture_default_str();
  opt_cmd->add_option("--metrics", opt_metrics, "comma-separated metric subset");
  opt_cmd->add_option("--iterations", opt_iterations,
                      "random: total draws (default M*4000); binned: evals per bin (default 4000)");
  opt_cmd->add_option("--bins", opt_bins, "number of bin edges")->capture_default_str();
  opt_cmd->add_option("--seed", opt_seed, "random search seed")->capture_default_str();
  opt_cmd->add_option("--objectives", opt_objectives, "bs-corr | as-negmse | bs-spearman")
      ->capture_default_str();
  opt_cmd->add_option("--out", opt_out, "write the ParetoResult JSON here");
  opt_cmd->add_option("--csv", opt_csv, "also write a plot-ready front CSV here");

  // score
  CommonFlags score_flags;
  std::string score_weights, score_front, score_entry = "best-score", score_out, score_table;
  auto* score_cmd =
      app.add_subcommand("score", "contingency classification and proxy score of a proxy");
  add_common(score_cmd, score_flags);
  score_cmd->add_option("--weights", score_weights, "weights JSON file");
  score_cmd->add_option("--front", score_front, "optimize output JSON");
  score_cmd->add_option("--entry", score_entry, "front entry index or 'best-score'")
      ->capture_default_str();
  score_cmd->add_option("--out", score_out, "write the score JSON here");
  score_cmd->add_option("--table", score_table, "write the 3x3 contingency CSV here");

  // simulate
  std::string sim_preset = "insensitive_ns", sim_out, sim_truth, sim_registry;
  std::int64_t sim_j = 300, sim_n = 100, sim_m = 10;
  std::uint64_t sim_seed = 0;
  int sim_threads = 0;
  auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic panel with ground truth");
  sim_cmd->add_option("--preset", sim_preset, "insensitive_ns | short_long_divergence")
      ->capture_default_str();
  sim_cmd->add_option("--J", sim_j, "experiments")->capture_default_str();
  sim_cmd->add_option("--N", sim_n, "buckets per experiment")->capture_default_str();
  sim_cmd->add_option("--M", sim_m, "auxiliary metrics")->capture_default_str();
  sim_cmd->add_option("--seed", sim_seed, "generator seed")->capture_default_str();
  sim_cmd->add_option("--threads", sim_threads, "worker threads");
  sim_cmd->add_option("--out", sim_out, "panel CSV path (delta-level schema)")->required();
  sim_cmd->add_option("--truth", sim_truth, "ground-truth CSV path");
  sim_cmd->add_option("--registry-out", sim_registry,
                      "registry CSV path (default: <out>.registry.csv)");

  // aupf
  std::string aupf_front, aupf_out;
  auto* aupf_cmd = app.add_subcommand("aupf", "area under a Pareto front (origin reference)");
  aupf_cmd->add_option("--front", aupf_front, "optimize output JSON")->required();
  aupf_cmd->add_option("--out", aupf_out, "write the AUPF JSON here");

  // plot-data
  std::string plot_front, plot_report, plot_out;
  auto* plot_cmd = app.add_subcommand("plot-data", "tidy CSV series for plotting");
  plot_cmd->add_option("--front", plot_front, "optimize output JSON");
  plot_cmd->add_option("--report", plot_report, "sensitivity report JSON");
  plot_cmd->add_option("--out", plot_out, "write the CSV here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      return app.exit(e);  // --help
    }
    app.exit(e);
    return 2;
  }

  try {
    if (validate_cmd->parsed()) return run_validate(validate_flags, validate_out);
    if (sens_cmd->parsed()) return run_sensitivity(sens_flags, sens_out);
    if (eval_cmd->parsed()) {
      return run_evaluate(eval_flags, eval_weights, eval_objectives, eval_out);
    }
    if (opt_cmd->parsed()) {
      return run_optimize(opt_flags, opt_algorithm, opt_metrics, opt_iterations, opt_bins,
                          opt_seed, opt_objectives, opt_out, opt_csv);
    }
    if (score_cmd->parsed()) {
      return run_score(score_flags, score_weights, score_front, score_entry, score_out,
                       score_table);
    }
    if (sim_cmd->parsed()) {
      return run_simulate(sim_preset, sim_j, sim_n, sim_m, sim_seed, sim_threads, sim_out,
                          sim_truth, sim_registry);
    }
    if (aupf_cmd->parsed()) return run_aupf(aupf_front, aupf_out);
    if (plot_cmd->parsed()) return run_plot_data(plot_front, plot_report, plot_out);
  } catch (const pf::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
