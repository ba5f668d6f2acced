// Experiment CLI: synthetic data generation, head/gate training, early-exit
// inference, evaluation, ablations and explanation export.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"

#include "gvgat/config.hpp"
#include "gvgat/model_io.hpp"
#include "gvgat/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace gvgat;

namespace {

void write_file(const std::string& path, const std::string& content) {
  fs::create_directories(fs::path(path).parent_path().empty()
                             ? "."
                             : fs::path(path).parent_path().string());
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "io", "cannot open for write: " + path);
  os << content;
}

RunConfig load_config_opt(const std::string& path) {
  return path.empty() ? default_config() : load_config(path);
}

std::vector<VideoRecord> load_data_or_die(const std::string& dir,
                                          const RunConfig& cfg) {
  LoadResult res = load_dataset(dir);
  for (const auto& w : res.warnings) std::cerr << "warning: " << w << "\n";
  require(!res.records.empty(), "invalid_input", "no usable videos in " + dir);
  if (res.info) {
    require(res.info->classes == cfg.classes, "invalid_input",
            "dataset manifest classes != config classes");
    require(res.info->mode == cfg.mode, "mode",
            "dataset manifest label mode != config label mode");
  }
  return res.records;
}

int cmd_synth(const RunConfig& cfg, const std::string& out) {
  auto data = synth_dataset(cfg.synth);
  save_dataset(data, {cfg.classes, cfg.mode}, out);
  std::cout << "wrote " << data.size() << " videos to " << out << "\n";
  return 0;
}

int cmd_train_head(const RunConfig& cfg, const std::string& data_dir,
                   const std::string& model_path) {
  auto data = load_data_or_die(data_dir, cfg);
  std::vector<double> hist;
  HeadParams head =
      train_head(data, cfg.feature_dim, cfg.classes, cfg.mode, cfg.head_train, &hist);
  ModelFile m;
  m.head = std::move(head);
  m.schedule = cfg.schedule;
  m.mode = cfg.mode;
  m.config_hash = config_hash(cfg);
  save_model(m, model_path);
  std::cout << "trained head (" << cfg.head_train.epochs
            << " epochs, final loss " << (hist.empty() ? 0.0 : hist.back())
            << "); wrote " << model_path << "\n";
  return 0;
}

int cmd_train_gates(const RunConfig& cfg, const std::string& data_dir,
                    const std::string& model_path) {
  auto data = load_data_or_die(data_dir, cfg);
  ModelFile m = load_model(model_path);
  std::vector<double> hist;
  m.gates = train_gates(m.head, data, m.schedule, m.mode, cfg.gate_train, &hist);
  m.config_hash = config_hash(cfg);
  save_model(m, model_path);
  std::cout << "trained " << m.gates.size() << " gates (final loss "
            << (hist.empty() ? 0.0 : hist.back()) << "); updated " << model_path << "\n";
  return 0;
}

int cmd_infer(const RunConfig& cfg, const std::string& data_dir,
              const std::string& model_path, const std::string& out) {
  auto data = load_data_or_die(data_dir, cfg);
  ModelFile m = load_model(model_path);
  require(!m.gates.empty(), "invalid_input", "model has no trained gates; run train-gates");
  std::vector<InferResult> results;
  for (const auto& rec : data)
    results.push_back(infer(m.head, m.gates, m.schedule, rec, cfg.cost, m.mode));
  fs::create_directories(out);
  write_file((fs::path(out) / "exit_records.json").string(), exit_records_json(results));
  std::cout << "wrote " << (fs::path(out) / "exit_records.json").string() << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& data_dir,
             const std::string& model_path, const std::string& out) {
  auto data = load_data_or_die(data_dir, cfg);
  ModelFile m = load_model(model_path);
  require(!m.gates.empty(), "invalid_input", "model has no trained gates; run train-gates");
  std::vector<InferResult> results;
  RunReport r = eval_run(m.head, m.gates, m.schedule, data, cfg.cost, m.mode, &results);
  fs::create_directories(out);
  write_file((fs::path(out) / "report.csv").string(), report_csv(r));
  write_file((fs::path(out) / "run.json").string(), report_json(r));
  write_file((fs::path(out) / "exit_records.json").string(), exit_records_json(results));
  std::cout << report_csv(r);
  return 0;
}

int cmd_ablate(const RunConfig& cfg, const std::string& data_dir,
               const std::string& model_path, const std::string& out) {
  auto data = load_data_or_die(data_dir, cfg);
  ModelFile m = load_model(model_path);
  std::vector<std::string> warnings;
  auto cells = ablation_run(m.head, data, m.schedule, m.mode, cfg.ablate_policies,
                            cfg.ablate_budgets, cfg.gate_train, cfg.seed, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  fs::create_directories(out);
  write_file((fs::path(out) / "ablation.csv").string(), ablation_csv(cells));
  std::cout << ablation_csv(cells);
  return 0;
}

int cmd_explain(const RunConfig& cfg, const std::string& data_dir,
                const std::string& model_path, const std::string& out) {
  auto data = load_data_or_die(data_dir, cfg);
  ModelFile m = load_model(model_path);
  require(!m.gates.empty(), "invalid_input", "model has no trained gates; run train-gates");
  std::vector<InferResult> results;
  for (const auto& rec : data)
    results.push_back(infer(m.head, m.gates, m.schedule, rec, cfg.cost, m.mode));
  std::vector<std::string> warnings;
  auto exps = export_explanations(results, data, cfg.explain_top_frames,
                                  cfg.explain_top_objects, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << "\n";
  fs::create_directories(out);
  write_file((fs::path(out) / "explanations.json").string(), explanations_json(exps));
  std::cout << "wrote " << (fs::path(out) / "explanations.json").string() << "\n";
  return 0;
}

int cmd_report(const std::string& data_path, const std::string& out) {
  const fs::path in = fs::is_directory(data_path) ? fs::path(data_path) / "run.json"
                                                  : fs::path(data_path);
  std::ifstream is(in);
  require(static_cast<bool>(is), "io", "cannot open run record: " + in.string());
  json j = json::parse(is, nullptr, false);
  require(!j.is_discarded(), "invalid_input", "malformed run record: " + in.string());
  RunReport r;
  r.metric_name = j.at("metric").get<std::string>();
  r.n_videos = j.at("n_videos").get<int>();
  r.q = j.at("frames_per_gate").get<std::vector<int>>();
  r.per_gate_counts = j.at("per_gate_counts").get<std::vector<int>>();
  r.per_gate_metric = j.at("per_gate_metric").get<std::vector<double>>();
  r.overall_metric = j.at("overall_metric").get<double>();
  r.all_frames_metric = j.at("all_frames_metric").get<double>();
  r.avg_frames = j.at("avg_frames").get<double>();
  r.total_cost = j.at("total_cost").get<double>();
  r.baseline_total_cost = j.at("baseline_total_cost").get<double>();
  r.cost_ratio = j.at("cost_ratio").get<double>();
  r.easy_count = j.value("easy_count", 0);
  r.hard_count = j.value("hard_count", 0);
  r.easy_avg_exit = j.value("easy_avg_exit_gate", 0.0);
  r.hard_avg_exit = j.value("hard_avg_exit_gate", 0.0);
  const std::string csv = report_csv(r);
  if (!out.empty()) {
    fs::create_directories(out);
    write_file((fs::path(out) / "report.csv").string(), csv);
  }
  std::cout << csv;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Gated graph-attention video recognition head: experiments CLI"};
  app.require_subcommand(1);

  std::string config_path, data_dir, model_path, out_dir;

  auto add_common = [&](CLI::App* sub, bool need_data, bool need_model, bool need_out) {
    sub->add_option("--config", config_path, "JSON config file");
    auto* d = sub->add_option("--data", data_dir, "dataset directory");
    auto* m = sub->add_option("--model", model_path, "model file (.gvgm)");
    auto* o = sub->add_option("--out", out_dir, "output directory");
    if (need_data) d->required();
    if (need_model) m->required();
    if (need_out) o->required();
  };

  add_common(app.add_subcommand("synth", "generate a synthetic feature dataset"),
             false, false, true);
  add_common(app.add_subcommand("train-head", "train the classification head"),
             true, true, false);
  add_common(app.add_subcommand("train-gates", "train the early-exit gates"),
             true, true, false);
  add_common(app.add_subcommand("infer", "run gated inference, emit exit records"),
             true, true, true);
  add_common(app.add_subcommand("eval", "evaluate and emit per-gate report"),
             true, true, true);
  add_common(app.add_subcommand("ablate", "frame-selection policy ablation table"),
             true, true, true);
  add_common(app.add_subcommand("explain", "export frame/object explanations"),
             true, true, true);
  add_common(app.add_subcommand("report", "re-emit CSV tables from a run record"),
             true, false, false);

  CLI11_PARSE(app, argc, argv);

  try {
    const RunConfig cfg = load_config_opt(config_path);
    if (app.got_subcommand("synth")) return cmd_synth(cfg, out_dir);
    if (app.got_subcommand("train-head")) return cmd_train_head(cfg, data_dir, model_path);
    if (app.got_subcommand("train-gates")) return cmd_train_gates(cfg, data_dir, model_path);
    if (app.got_subcommand("infer")) return cmd_infer(cfg, data_dir, model_path, out_dir);
    if (app.got_subcommand("eval")) return cmd_eval(cfg, data_dir, model_path, out_dir);
    if (app.got_subcommand("ablate")) return cmd_ablate(cfg, data_dir, model_path, out_dir);
    if (app.got_subcommand("explain")) return cmd_explain(cfg, data_dir, model_path, out_dir);
    if (app.got_subcommand("report")) return cmd_report(data_dir, out_dir);
  } catch (const Error& e) {
    std::cerr << "error " << json{{"code", e.code}, {"message", e.what()}}.dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error " << json{{"code", "internal"}, {"message", e.what()}}.dump() << "\n";
    return 1;
  }
  return 1;
}
