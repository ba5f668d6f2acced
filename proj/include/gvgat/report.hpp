#pragma once

#include <string>
#include <vector>

#include "gvgat/config.hpp"
#include "gvgat/gating.hpp"
#include "gvgat/metrics.hpp"

namespace gvgat {

struct RunReport {
  std::string metric_name;  // "top1" or "mAP"
  int n_videos = 0;
  std::vector<int> q;                   // frames per gate
  std::vector<int> per_gate_counts;     // videos exiting at each gate
  std::vector<double> per_gate_metric;  // -1 when the subset is empty/undefined
  double overall_metric = 0.0;
  double all_frames_metric = 0.0;  // same head, local branch on every frame
  double avg_frames = 0.0;
  double total_cost = 0.0;
  double baseline_total_cost = 0.0;
  double cost_ratio = 0.0;  // baseline / gated
  int easy_count = 0, hard_count = 0;
  double easy_avg_exit = 0.0, hard_avg_exit = 0.0;
  std::vector<std::string> warnings;
};

// All-frames (no gating) classification scores per video.
std::vector<Vec> all_frames_scores(const HeadParams& head,
                                   const std::vector<VideoRecord>& data,
                                   LabelMode mode);

RunReport eval_run(const HeadParams& head, const std::vector<GateParams>& gates,
                   const GateSchedule& sched, const std::vector<VideoRecord>& data,
                   const CostModel& cost, LabelMode mode,
                   std::vector<InferResult>* results_out = nullptr);

std::string report_csv(const RunReport& r);
std::string report_json(const RunReport& r);
std::string exit_records_json(const std::vector<InferResult>& results);

// ---- ablation ---------------------------------------------------------------------

struct AblationCell {
  std::string policy;
  int theta = 0;
  double metric = 0.0;
  double avg_frames = 0.0;  // realized average (gated row), else theta
  double beta = 0.0;        // gated row only
  std::string note;
};

std::vector<AblationCell> ablation_run(const HeadParams& head,
                                       const std::vector<VideoRecord>& data,
                                       const GateSchedule& sched, LabelMode mode,
                                       const std::vector<std::string>& policies,
                                       const std::vector<int>& budgets,
                                       const TrainConfig& gate_cfg, uint64_t seed,
                                       std::vector<std::string>* warnings = nullptr);

std::string ablation_csv(const std::vector<AblationCell>& cells);

// ---- explanations -------------------------------------------------------------------

struct Explanation {
  std::string video_id;
  struct FrameExp {
    int frame = 0;
    std::vector<int> top_objects;           // ranked by object WiD, descending
    std::vector<std::string> object_names;  // empty without metadata
  };
  std::vector<FrameExp> frames;  // in policy selection order
  bool frames_only = false;
};

std::vector<Explanation> export_explanations(const std::vector<InferResult>& results,
                                             const std::vector<VideoRecord>& data,
                                             int top_frames, int top_objects,
                                             std::vector<std::string>* warnings = nullptr);

std::string explanations_json(const std::vector<Explanation>& exps);

}  // namespace gvgat
