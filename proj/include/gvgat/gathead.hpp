#pragma once

#include <vector>

#include "gvgat/dataset.hpp"
#include "gvgat/numkernel.hpp"

namespace gvgat {

// One GAT block: shared attention projection plus one graph-conv weight per
// layer. Adjacency is row_softmax((X Wa)(X Wa)^T / sqrt(F)); node update is
// relu(A X Wl); WiDs are the minmax-normalized column means of the first
// layer's adjacency; pooling is the WiD-weighted mean of final node features.
struct GatBlockParams {
  Mat attn_proj;                  // F x F
  std::vector<Mat> layer_weights; // L of F x F
  uint64_t seed = 0;
};

struct GlobalSummary {
  Vec delta;  // F
  Vec wids;   // P, in [0,1]
};

struct FrameLocalSummary {
  Vec eta;       // F
  Vec obj_wids;  // K, in [0,1]
};

struct HeadParams {
  GatBlockParams omega1, omega2, omega3;
  Mat classifier;       // 2F x G
  Mat classifier_bias;  // 1 x G
  int feature_dim = 0;
  int classes = 0;

  std::vector<Mat*> param_ptrs();
  std::vector<const Mat*> param_ptrs() const;
};

HeadParams init_head(int feature_dim, int classes, uint64_t seed);
GatBlockParams init_gat_block(int feature_dim, uint64_t seed, int layers = 2);
uint64_t head_checksum(const HeadParams& head);

// ---- tape-based forward (training / gradient checks) ------------------------

struct GatBlockRefs {
  int attn = -1;
  std::vector<int> layers;
};
struct GatBlockOut {
  int pooled;  // 1 x F
  int wids;    // 1 x M
};
GatBlockRefs tape_gat_params(Tape& t, const GatBlockParams& p);
GatBlockOut gat_block_t(Tape& t, const GatBlockRefs& p, int nodes);

struct HeadRefs {
  GatBlockRefs omega1, omega2, omega3;
  int classifier = -1, classifier_bias = -1;
};
HeadRefs tape_head_params(Tape& t, const HeadParams& h);

// Full ViGAT-style forward on all P frames: logits node id (1 x G).
int head_logits_t(Tape& t, const HeadRefs& h, const VideoRecord& rec);
// Classifier on precomputed delta/rho row-vector nodes.
int classify_logits_t(Tape& t, const HeadRefs& h, int delta, int rho);
// Classification loss node for the record's labels.
int label_loss_t(Tape& t, int logits, const std::vector<int>& labels, int classes,
                 LabelMode mode);

// ---- eager forward -----------------------------------------------------------

std::pair<Vec, Vec> gat_block(const GatBlockParams& p, const Mat& nodes);
GlobalSummary global_path(const HeadParams& h, const Mat& gamma);
FrameLocalSummary local_frame(const HeadParams& h, const Mat& objects);
Vec local_video(const HeadParams& h, const Mat& etas);
Vec classify(const HeadParams& h, const Vec& delta, const Vec& rho, LabelMode mode);
Vec classify_logits(const HeadParams& h, const Vec& delta, const Vec& rho);
double label_loss(const Vec& logits, const std::vector<int>& labels, int classes,
                  LabelMode mode);

// ---- training -----------------------------------------------------------------

struct TrainConfig {
  int epochs = 40;
  double lr = 1e-4;
  std::vector<int> decay_epochs = {16, 35};
  double decay_factor = 0.1;
  int batch = 8;
  std::string optimizer = "adam";
  uint64_t seed = 1;
};

// Trains the head on all P frames of every video (no gating).
HeadParams train_head(const std::vector<VideoRecord>& data, int feature_dim,
                      int classes, LabelMode mode, const TrainConfig& cfg,
                      std::vector<double>* loss_history = nullptr);

}  // namespace gvgat
