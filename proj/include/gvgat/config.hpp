#pragma once

#include <string>
#include <vector>

#include "gvgat/cost.hpp"
#include "gvgat/dataset.hpp"
#include "gvgat/framepolicy.hpp"
#include "gvgat/gathead.hpp"
#include "gvgat/gating.hpp"

namespace gvgat {

// All run hyperparameters; loaded from a single JSON config file.
struct RunConfig {
  int feature_dim = 64;
  int classes = 4;
  int objects = 8;
  LabelMode mode = LabelMode::Single;
  uint64_t seed = 1234;

  GateSchedule schedule;       // S, Q, beta, threshold
  TrainConfig head_train;      // head defaults mirror the gate schedule
  TrainConfig gate_train;
  SynthSpec synth;
  CostModel cost;
  PolicyVariant policy = PolicyVariant::Proposed;

  std::vector<int> ablate_budgets = {10, 20, 30};
  std::vector<std::string> ablate_policies = {"random",   "wid",      "random_local",
                                              "wid_local", "proposed", "gated"};
  int explain_top_frames = 2;
  int explain_top_objects = 3;
};

RunConfig default_config();
RunConfig load_config(const std::string& path);
std::string config_to_json(const RunConfig& cfg);  // canonical dump
uint64_t config_hash(const RunConfig& cfg);

}  // namespace gvgat
