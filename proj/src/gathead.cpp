#include "gvgat/gathead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gvgat/optim.hpp"

namespace gvgat {

std::vector<Mat*> HeadParams::param_ptrs() {
  std::vector<Mat*> out;
  for (GatBlockParams* b : {&omega1, &omega2, &omega3}) {
    out.push_back(&b->attn_proj);
    for (auto& w : b->layer_weights) out.push_back(&w);
  }
  out.push_back(&classifier);
  out.push_back(&classifier_bias);
  return out;
}

std::vector<const Mat*> HeadParams::param_ptrs() const {
  auto ps = const_cast<HeadParams*>(this)->param_ptrs();
  return {ps.begin(), ps.end()};
}

GatBlockParams init_gat_block(int feature_dim, uint64_t seed, int layers) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  GatBlockParams p;
  p.seed = seed;
  p.attn_proj = Mat::uniform(feature_dim, feature_dim, -bound, bound, rng);
  for (int l = 0; l < layers; ++l)
    p.layer_weights.push_back(Mat::uniform(feature_dim, feature_dim, -bound, bound, rng));
  return p;
}

HeadParams init_head(int feature_dim, int classes, uint64_t seed) {
  require(feature_dim >= 1 && classes >= 1, "invalid_input", "init_head: bad dimensions");
  HeadParams h;
  h.feature_dim = feature_dim;
  h.classes = classes;
  h.omega1 = init_gat_block(feature_dim, seed * 6364136223846793005ull + 1);
  h.omega2 = init_gat_block(feature_dim, seed * 6364136223846793005ull + 2);
  h.omega3 = init_gat_block(feature_dim, seed * 6364136223846793005ull + 3);
  Rng rng(seed * 6364136223846793005ull + 4);
  const double bound = 1.0 / std::sqrt(2.0 * feature_dim);
  h.classifier = Mat::uniform(2 * feature_dim, classes, -bound, bound, rng);
  h.classifier_bias = Mat::uniform(1, classes, -bound, bound, rng);
  return h;
}

uint64_t head_checksum(const HeadParams& head) {
  uint64_t h = 1469598103934665603ull;
  for (const Mat* m : head.param_ptrs()) h = mat_checksum(*m, h);
  return h;
}

// ---- tape forward ------------------------------------------------------------

GatBlockRefs tape_gat_params(Tape& t, const GatBlockParams& p) {
  GatBlockRefs r;
  r.attn = t.input(p.attn_proj);
  for (const auto& w : p.layer_weights) r.layers.push_back(t.input(w));
  return r;
}

GatBlockOut gat_block_t(Tape& t, const GatBlockRefs& p, int nodes) {
  const Mat& X0 = t.val(nodes);
  require(X0.rows >= 1, "invalid_input", "gat_block: empty node set");
  const double inv_sqrt_f = 1.0 / std::sqrt(static_cast<double>(X0.cols));
  int x = nodes;
  int first_adj = -1;
  for (int pidx : p.layers) {
    int proj = t.matmul(x, p.attn);
    int scores = t.scale(t.matmul_nt(proj, proj), inv_sqrt_f);
    int adj = t.row_softmax(scores);
    if (first_adj < 0) first_adj = adj;
    x = t.relu(t.matmul(t.matmul(adj, x), pidx));
  }
  int wids = t.minmax_norm(t.col_mean(first_adj));
  int pooled = t.weighted_pool(x, wids);
  return {pooled, wids};
}

HeadRefs tape_head_params(Tape& t, const HeadParams& h) {
  HeadRefs r;
  r.omega1 = tape_gat_params(t, h.omega1);
  r.omega2 = tape_gat_params(t, h.omega2);
  r.omega3 = tape_gat_params(t, h.omega3);
  r.classifier = t.input(h.classifier);
  r.classifier_bias = t.input(h.classifier_bias);
  return r;
}

int classify_logits_t(Tape& t, const HeadRefs& h, int delta, int rho) {
  int zeta = t.concat_cols(delta, rho);
  return t.add_rowvec(t.matmul(zeta, h.classifier), h.classifier_bias);
}

int head_logits_t(Tape& t, const HeadRefs& h, const VideoRecord& rec) {
  int gamma = t.input(rec.global_feats);
  auto global = gat_block_t(t, h.omega1, gamma);
  std::vector<int> etas;
  for (const Mat& objs : rec.object_feats) {
    auto local = gat_block_t(t, h.omega2, t.input(objs));
    etas.push_back(local.pooled);
  }
  int big_h = t.stack_rows(etas);
  auto vid = gat_block_t(t, h.omega3, big_h);
  return classify_logits_t(t, h, global.pooled, vid.pooled);
}

int label_loss_t(Tape& t, int logits, const std::vector<int>& labels, int classes,
                 LabelMode mode) {
  require(!labels.empty(), "invalid_input", "label_loss: no labels");
  if (mode == LabelMode::Single) {
    require(labels.size() == 1, "mode", "single-label mode expects exactly one label");
    return t.softmax_cross_entropy(logits, labels[0]);
  }
  Vec target(classes, 0.0);
  for (int l : labels) {
    require(l >= 0 && l < classes, "index", "label out of range");
    target[l] = 1.0;
  }
  return t.bce_mean_sigmoid(logits, target);
}

// ---- eager wrappers ------------------------------------------------------------

std::pair<Vec, Vec> gat_block(const GatBlockParams& p, const Mat& nodes) {
  Tape t;
  auto out = gat_block_t(t, tape_gat_params(t, p), t.input(nodes));
  return {t.val(out.pooled).as_vec(), t.val(out.wids).as_vec()};
}

GlobalSummary global_path(const HeadParams& h, const Mat& gamma) {
  auto [pooled, wids] = gat_block(h.omega1, gamma);
  return {std::move(pooled), std::move(wids)};
}

FrameLocalSummary local_frame(const HeadParams& h, const Mat& objects) {
  auto [pooled, wids] = gat_block(h.omega2, objects);
  return {std::move(pooled), std::move(wids)};
}

Vec local_video(const HeadParams& h, const Mat& etas) {
  return gat_block(h.omega3, etas).first;
}

Vec classify_logits(const HeadParams& h, const Vec& delta, const Vec& rho) {
  require(static_cast<int>(delta.size()) == h.feature_dim &&
              static_cast<int>(rho.size()) == h.feature_dim,
          "shape", "classify: feature dimension mismatch");
  Vec zeta(delta);
  zeta.insert(zeta.end(), rho.begin(), rho.end());
  Mat logits = matmul(Mat::row(zeta), h.classifier);
  for (int j = 0; j < h.classes; ++j) logits(0, j) += h.classifier_bias(0, j);
  return logits.as_vec();
}

Vec classify(const HeadParams& h, const Vec& delta, const Vec& rho, LabelMode mode) {
  Vec logits = classify_logits(h, delta, rho);
  if (mode == LabelMode::Single) return softmax(logits);
  for (auto& x : logits) x = 1.0 / (1.0 + std::exp(-x));
  return logits;
}

double label_loss(const Vec& logits, const std::vector<int>& labels, int classes,
                  LabelMode mode) {
  require(!labels.empty(), "invalid_input", "label_loss: no labels");
  if (mode == LabelMode::Single) {
    require(labels.size() == 1, "mode", "single-label mode expects exactly one label");
    return cross_entropy(logits, labels[0]);
  }
  Vec target(classes, 0.0);
  for (int l : labels) target[l] = 1.0;
  double loss = 0.0;
  for (int j = 0; j < classes; ++j) {
    const double x = logits[j];
    loss += std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))) - target[j] * x;
  }
  return loss / classes;
}

// ---- training ---------------------------------------------------------------

HeadParams train_head(const std::vector<VideoRecord>& data, int feature_dim,
                      int classes, LabelMode mode, const TrainConfig& cfg,
                      std::vector<double>* loss_history) {
  require(!data.empty(), "invalid_input", "train_head: empty dataset");
  HeadParams head = init_head(feature_dim, classes, cfg.seed);
  auto params = head.param_ptrs();
  Optimizer opt(cfg.optimizer, params);
  Rng shuffle_rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);

  std::vector<int> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg.lr, cfg.decay_factor, cfg.decay_epochs, epoch);
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(static_cast<int>(i))]);

    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t batch_end = std::min(pos + cfg.batch, order.size());
      std::vector<Mat> grads;
      for (const Mat* p : params) grads.push_back(Mat::zeros(p->rows, p->cols));
      const double inv_batch = 1.0 / static_cast<double>(batch_end - pos);
      for (size_t b = pos; b < batch_end; ++b) {
        const VideoRecord& rec = data[order[b]];
        Tape t;
        HeadRefs refs = tape_head_params(t, head);
        int logits = head_logits_t(t, refs, rec);
        int loss = label_loss_t(t, logits, rec.labels, classes, mode);
        epoch_loss += t.val(loss)(0, 0);
        t.backward(loss);
        std::vector<int> ids;
        for (const GatBlockRefs* gb : {&refs.omega1, &refs.omega2, &refs.omega3}) {
          ids.push_back(gb->attn);
          for (int l : gb->layers) ids.push_back(l);
        }
        ids.push_back(refs.classifier);
        ids.push_back(refs.classifier_bias);
        for (size_t k = 0; k < ids.size(); ++k) {
          const Mat& gm = t.grad(ids[k]);
          for (size_t e = 0; e < gm.a.size(); ++e) grads[k].a[e] += inv_batch * gm.a[e];
        }
      }
      opt.step(grads, lr);
      pos = batch_end;
    }
    if (loss_history) loss_history->push_back(epoch_loss / data.size());
  }
  return head;
}

}  // namespace gvgat
