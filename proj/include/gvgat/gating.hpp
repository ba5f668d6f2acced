#pragma once

#include <string>
#include <vector>

#include "gvgat/cost.hpp"
#include "gvgat/dataset.hpp"
#include "gvgat/framepolicy.hpp"
#include "gvgat/gathead.hpp"

namespace gvgat {

// One gate: width-3 same-padded 1-D convolution over the sequence axis
// (F -> F channels), relu, a GAT block, and a dense F -> 1 layer + sigmoid.
struct GateParams {
  Mat conv_k0, conv_k1, conv_k2;  // F x F taps (offsets -1, 0, +1)
  Mat conv_bias;                  // 1 x F
  GatBlockParams gat;
  Mat dense_w;  // F x 1
  Mat dense_b;  // 1 x 1
  int seq_len = 0;  // expected input rows, s + 1

  std::vector<Mat*> param_ptrs();
};

struct GateSchedule {
  int gates = 5;
  std::vector<int> q = {2, 4, 6, 8, 10};  // strictly ascending
  double beta = 0.3;
  double threshold = 0.5;

  void validate() const;
};

struct ExitRecord {
  std::string video_id;
  int exit_gate = 0;             // s*, 1-based
  std::vector<int> frames_used;  // ordered selection
  Vec scores;                    // G class confidences
  Vec gate_outputs;              // one per evaluated gate
  double cost_units = 0.0;
};

GateParams init_gate(int feature_dim, int seq_len, uint64_t seed);
uint64_t gates_checksum(const std::vector<GateParams>& gates);

// ---- gate forward -------------------------------------------------------------

struct GateRefs {
  int k0 = -1, k1 = -1, k2 = -1, bias = -1;
  GatBlockRefs gat;
  int dense_w = -1, dense_b = -1;
};
GateRefs tape_gate_params(Tape& t, const GateParams& g);
int gate_logit_t(Tape& t, const GateRefs& g, int z);  // 1 x 1 pre-sigmoid

double gate_forward(const GateParams& g, const Mat& z);  // in (0,1)

// ---- pseudolabels / loss --------------------------------------------------------

double epsilon(const GateSchedule& sched, int s);  // beta * exp(s/2), 1-based s
int pseudolabel(double loss, double eps);          // 1 iff loss <= eps
double gate_loss(const Vec& gate_outputs, const std::vector<int>& pseudolabels);

// ---- training / inference -------------------------------------------------------

// Head-frozen per-video precomputation: policy selection to Q^(S), local
// summaries, the growing Z matrices and the classification loss at each gate.
struct GatePrep {
  std::string video_id;
  std::vector<int> frames;   // ordered, length min(Q^(S), P)
  std::vector<Mat> z;        // S matrices, (s+1) x F
  Vec losses;                // S classification losses
  Vec delta;
  std::vector<Vec> rho;      // S local video features
  bool is_hard = false;
};
GatePrep prepare_gate_inputs(const HeadParams& head, const VideoRecord& rec,
                             const GateSchedule& sched, LabelMode mode);

std::vector<GateParams> train_gates(const HeadParams& head,
                                    const std::vector<VideoRecord>& data,
                                    const GateSchedule& sched, LabelMode mode,
                                    const TrainConfig& cfg,
                                    std::vector<double>* loss_history = nullptr);

// Variant used by the ablation beta sweep: reuses precomputed inputs.
std::vector<GateParams> train_gates_prepared(const std::vector<GatePrep>& prep,
                                             int feature_dim,
                                             const GateSchedule& sched,
                                             const TrainConfig& cfg,
                                             std::vector<double>* loss_history = nullptr);

struct InferResult {
  ExitRecord record;
  GlobalSummary global;
  std::vector<FrameLocalSummary> locals;  // aligned with record.frames_used
};

InferResult infer(const HeadParams& head, const std::vector<GateParams>& gates,
                  const GateSchedule& sched, const VideoRecord& rec,
                  const CostModel& cost, LabelMode mode, bool cache_local = true);

}  // namespace gvgat
