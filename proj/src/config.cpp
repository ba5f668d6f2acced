#include "gvgat/config.hpp"

#include <fstream>

#include "json.hpp"

using nlohmann::json;

namespace gvgat {

RunConfig default_config() {
  RunConfig cfg;
  cfg.head_train.epochs = 40;
  cfg.head_train.lr = 1e-4;
  cfg.head_train.decay_epochs = {16, 35};
  cfg.head_train.decay_factor = 0.1;
  cfg.gate_train = cfg.head_train;
  cfg.synth.seed = cfg.seed;
  cfg.head_train.seed = cfg.seed;
  cfg.gate_train.seed = cfg.seed + 1;
  return cfg;
}

namespace {

void read_train(const json& j, TrainConfig& t) {
  t.epochs = j.value("epochs", t.epochs);
  t.lr = j.value("lr", t.lr);
  t.decay_epochs = j.value("decay_epochs", t.decay_epochs);
  t.decay_factor = j.value("decay_factor", t.decay_factor);
  t.batch = j.value("batch", t.batch);
  t.optimizer = j.value("optimizer", t.optimizer);
  if (j.contains("seed")) t.seed = j["seed"].get<uint64_t>();
}

json dump_train(const TrainConfig& t) {
  return json{{"epochs", t.epochs},       {"lr", t.lr},
              {"decay_epochs", t.decay_epochs}, {"decay_factor", t.decay_factor},
              {"batch", t.batch},         {"optimizer", t.optimizer},
              {"seed", t.seed}};
}

}  // namespace

RunConfig load_config(const std::string& path) {
  std::ifstream is(path);
  require(static_cast<bool>(is), "io", "cannot open config: " + path);
  json j = json::parse(is, nullptr, false);
  require(!j.is_discarded(), "invalid_input", "malformed config JSON: " + path);

  RunConfig cfg = default_config();
  cfg.feature_dim = j.value("feature_dim", cfg.feature_dim);
  cfg.classes = j.value("classes", cfg.classes);
  cfg.objects = j.value("objects", cfg.objects);
  cfg.mode = label_mode_from_string(j.value("label_mode", to_string(cfg.mode)));
  if (j.contains("seed")) cfg.seed = j["seed"].get<uint64_t>();

  // sub-seeds follow the run seed unless overridden below
  cfg.synth.seed = cfg.seed;
  cfg.head_train.seed = cfg.seed;
  cfg.gate_train.seed = cfg.seed + 1;

  if (j.contains("schedule")) {
    const json& s = j["schedule"];
    if (s.contains("q")) {
      cfg.schedule.q = s["q"].get<std::vector<int>>();
      cfg.schedule.gates = static_cast<int>(cfg.schedule.q.size());
    }
    cfg.schedule.beta = s.value("beta", cfg.schedule.beta);
    cfg.schedule.threshold = s.value("threshold", cfg.schedule.threshold);
  }
  cfg.schedule.validate();

  if (j.contains("head_train")) read_train(j["head_train"], cfg.head_train);
  if (j.contains("gate_train")) read_train(j["gate_train"], cfg.gate_train);

  if (j.contains("synth")) {
    const json& s = j["synth"];
    cfg.synth.videos = s.value("videos", cfg.synth.videos);
    cfg.synth.frames = s.value("frames", cfg.synth.frames);
    cfg.synth.hard_fraction = s.value("hard_fraction", cfg.synth.hard_fraction);
    cfg.synth.noise = s.value("noise", cfg.synth.noise);
    cfg.synth.object_noise = s.value("object_noise", cfg.synth.object_noise);
    cfg.synth.salient_scale = s.value("salient_scale", cfg.synth.salient_scale);
    cfg.synth.easy_event_fraction = s.value("easy_event_fraction", cfg.synth.easy_event_fraction);
    cfg.synth.hard_event_fraction = s.value("hard_event_fraction", cfg.synth.hard_event_fraction);
    if (s.contains("seed")) cfg.synth.seed = s["seed"].get<uint64_t>();
  }
  cfg.synth.classes = cfg.classes;
  cfg.synth.dims = cfg.feature_dim;
  cfg.synth.objects = cfg.objects;
  cfg.synth.mode = cfg.mode;

  if (j.contains("cost")) {
    const json& c = j["cost"];
    cfg.cost.backbone_frame = c.value("backbone_frame", cfg.cost.backbone_frame);
    cfg.cost.detector_frame = c.value("detector_frame", cfg.cost.detector_frame);
    cfg.cost.backbone_object = c.value("backbone_object", cfg.cost.backbone_object);
    cfg.cost.head_block = c.value("head_block", cfg.cost.head_block);
    cfg.cost.gate = c.value("gate", cfg.cost.gate);
  }

  if (j.contains("policy")) cfg.policy = policy_variant_from_string(j["policy"].get<std::string>());
  if (j.contains("ablate")) {
    cfg.ablate_budgets = j["ablate"].value("budgets", cfg.ablate_budgets);
    cfg.ablate_policies = j["ablate"].value("policies", cfg.ablate_policies);
  }
  if (j.contains("explain")) {
    cfg.explain_top_frames = j["explain"].value("top_frames", cfg.explain_top_frames);
    cfg.explain_top_objects = j["explain"].value("top_objects", cfg.explain_top_objects);
  }
  return cfg;
}

std::string config_to_json(const RunConfig& cfg) {
  json j{
      {"feature_dim", cfg.feature_dim},
      {"classes", cfg.classes},
      {"objects", cfg.objects},
      {"label_mode", to_string(cfg.mode)},
      {"seed", cfg.seed},
      {"schedule",
       {{"q", cfg.schedule.q}, {"beta", cfg.schedule.beta}, {"threshold", cfg.schedule.threshold}}},
      {"head_train", dump_train(cfg.head_train)},
      {"gate_train", dump_train(cfg.gate_train)},
      {"synth",
       {{"videos", cfg.synth.videos},
        {"frames", cfg.synth.frames},
        {"hard_fraction", cfg.synth.hard_fraction},
        {"noise", cfg.synth.noise},
        {"object_noise", cfg.synth.object_noise},
        {"salient_scale", cfg.synth.salient_scale},
        {"easy_event_fraction", cfg.synth.easy_event_fraction},
        {"hard_event_fraction", cfg.synth.hard_event_fraction},
        {"seed", cfg.synth.seed}}},
      {"cost",
       {{"backbone_frame", cfg.cost.backbone_frame},
        {"detector_frame", cfg.cost.detector_frame},
        {"backbone_object", cfg.cost.backbone_object},
        {"head_block", cfg.cost.head_block},
        {"gate", cfg.cost.gate}}},
      {"policy", to_string(cfg.policy)},
      {"ablate", {{"budgets", cfg.ablate_budgets}, {"policies", cfg.ablate_policies}}},
      {"explain",
       {{"top_frames", cfg.explain_top_frames}, {"top_objects", cfg.explain_top_objects}}}};
  return j.dump(2);
}

uint64_t config_hash(const RunConfig& cfg) {
  const std::string s = config_to_json(cfg);
  return fnv1a(s.data(), s.size());
}

}  // namespace gvgat
