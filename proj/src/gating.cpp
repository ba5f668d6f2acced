#include "gvgat/gating.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "gvgat/optim.hpp"

namespace gvgat {

std::vector<Mat*> GateParams::param_ptrs() {
  std::vector<Mat*> out = {&conv_k0, &conv_k1, &conv_k2, &conv_bias, &gat.attn_proj};
  for (auto& w : gat.layer_weights) out.push_back(&w);
  out.push_back(&dense_w);
  out.push_back(&dense_b);
  return out;
}

void GateSchedule::validate() const {
  require(gates >= 1, "invalid_input", "schedule: need at least one gate");
  require(static_cast<int>(q.size()) == gates, "invalid_input",
          "schedule: |Q| must equal gate count");
  for (size_t i = 0; i < q.size(); ++i) {
    require(q[i] >= 1, "invalid_input", "schedule: Q entries must be positive");
    if (i > 0)
      require(q[i] > q[i - 1], "invalid_input", "schedule: Q must be strictly ascending");
  }
  require(beta > 0.0, "invalid_input", "schedule: beta must be positive");
  require(threshold > 0.0 && threshold < 1.0, "invalid_input",
          "schedule: threshold must lie in (0,1)");
}

GateParams init_gate(int feature_dim, int seq_len, uint64_t seed) {
  Rng rng(seed);
  const double bound = 1.0 / std::sqrt(static_cast<double>(feature_dim));
  GateParams g;
  g.seq_len = seq_len;
  g.conv_k0 = Mat::uniform(feature_dim, feature_dim, -bound, bound, rng);
  g.conv_k1 = Mat::uniform(feature_dim, feature_dim, -bound, bound, rng);
  g.conv_k2 = Mat::uniform(feature_dim, feature_dim, -bound, bound, rng);
  g.conv_bias = Mat::uniform(1, feature_dim, -bound, bound, rng);
  g.gat = init_gat_block(feature_dim, seed * 0x2545f4914f6cdd1dull + 7);
  g.dense_w = Mat::uniform(feature_dim, 1, -bound, bound, rng);
  g.dense_b = Mat::uniform(1, 1, -bound, bound, rng);
  return g;
}

uint64_t gates_checksum(const std::vector<GateParams>& gates) {
  uint64_t h = 1469598103934665603ull;
  for (const auto& g : gates)
    for (Mat* m : const_cast<GateParams&>(g).param_ptrs()) h = mat_checksum(*m, h);
  return h;
}

GateRefs tape_gate_params(Tape& t, const GateParams& g) {
  GateRefs r;
  r.k0 = t.input(g.conv_k0);
  r.k1 = t.input(g.conv_k1);
  r.k2 = t.input(g.conv_k2);
  r.bias = t.input(g.conv_bias);
  r.gat = tape_gat_params(t, g.gat);
  r.dense_w = t.input(g.dense_w);
  r.dense_b = t.input(g.dense_b);
  return r;
}

int gate_logit_t(Tape& t, const GateRefs& g, int z) {
  // out[s] = z[s-1] k0 + z[s] k1 + z[s+1] k2 + bias
  int conv = t.add(t.add(t.matmul(t.shift_rows(z, -1), g.k0), t.matmul(z, g.k1)),
                   t.matmul(t.shift_rows(z, 1), g.k2));
  int act = t.relu(t.add_rowvec(conv, g.bias));
  auto pooled = gat_block_t(t, g.gat, act);
  return t.add(t.matmul(pooled.pooled, g.dense_w), g.dense_b);
}

double gate_forward(const GateParams& g, const Mat& z) {
  require(z.rows == g.seq_len, "shape",
          "gate_forward: sequence length does not match this gate");
  require(z.cols == g.conv_k0.rows, "shape", "gate_forward: feature dimension mismatch");
  Tape t;
  int logit = gate_logit_t(t, tape_gate_params(t, g), t.input(z));
  return 1.0 / (1.0 + std::exp(-t.val(logit)(0, 0)));
}

double epsilon(const GateSchedule& sched, int s) {
  require(s >= 1 && s <= sched.gates, "index", "epsilon: gate index out of range");
  return sched.beta * std::exp(0.5 * s);
}

int pseudolabel(double loss, double eps) {
  require(loss >= 0.0, "invalid_input", "pseudolabel: negative loss");
  return loss <= eps ? 1 : 0;
}

double gate_loss(const Vec& gate_outputs, const std::vector<int>& pseudolabels) {
  require(gate_outputs.size() == pseudolabels.size(), "shape",
          "gate_loss: length mismatch");
  double total = 0.0;
  for (size_t s = 0; s < gate_outputs.size(); ++s)
    total += bce(gate_outputs[s], pseudolabels[s]);
  return total / gate_outputs.size();
}

// ---- training -------------------------------------------------------------------

GatePrep prepare_gate_inputs(const HeadParams& head, const VideoRecord& rec,
                             const GateSchedule& sched, LabelMode mode) {
  GatePrep prep;
  prep.video_id = rec.id;
  prep.is_hard = is_hard_video(rec);
  GlobalSummary global = global_path(head, rec.global_feats);
  prep.delta = global.delta;

  PolicyState st = policy_init(global.wids, rec.global_feats);
  std::vector<FrameLocalSummary> locals;  // aligned with prep.frames
  for (int s = 1; s <= sched.gates; ++s) {
    std::vector<int> sel = select_for_gate(st, sched.q[s - 1]);
    for (size_t i = locals.size(); i < sel.size(); ++i)
      locals.push_back(local_frame(head, rec.object_feats[sel[i]]));
    prep.frames = sel;

    Mat etas(static_cast<int>(sel.size()), head.feature_dim);
    for (size_t i = 0; i < sel.size(); ++i)
      for (int j = 0; j < head.feature_dim; ++j) etas(static_cast<int>(i), j) = locals[i].eta[j];
    Vec rho = local_video(head, etas);

    Mat z(s + 1, head.feature_dim);
    for (int j = 0; j < head.feature_dim; ++j) z(0, j) = prep.delta[j];
    for (int r = 1; r < s; ++r)
      for (int j = 0; j < head.feature_dim; ++j) z(r, j) = prep.rho[r - 1][j];
    for (int j = 0; j < head.feature_dim; ++j) z(s, j) = rho[j];
    prep.rho.push_back(std::move(rho));
    prep.z.push_back(std::move(z));

    Vec logits = classify_logits(head, prep.delta, prep.rho.back());
    prep.losses.push_back(label_loss(logits, rec.labels, head.classes, mode));
  }
  return prep;
}

std::vector<GateParams> train_gates_prepared(const std::vector<GatePrep>& prep,
                                             int feature_dim,
                                             const GateSchedule& sched,
                                             const TrainConfig& cfg,
                                             std::vector<double>* loss_history) {
  require(!prep.empty(), "invalid_input", "train_gates: empty dataset");
  sched.validate();
  const int S = sched.gates;

  std::vector<GateParams> gates;
  for (int s = 1; s <= S; ++s)
    gates.push_back(init_gate(feature_dim, s + 1, cfg.seed * 0x9e3779b97f4a7c15ull + s));

  // pseudolabels are fixed once the head is frozen
  std::vector<std::vector<int>> labels(prep.size(), std::vector<int>(S));
  for (size_t v = 0; v < prep.size(); ++v)
    for (int s = 1; s <= S; ++s)
      labels[v][s - 1] = pseudolabel(prep[v].losses[s - 1], epsilon(sched, s));

  std::vector<Mat*> params;
  for (auto& g : gates)
    for (Mat* m : g.param_ptrs()) params.push_back(m);
  Optimizer opt(cfg.optimizer, params);
  Rng shuffle_rng(cfg.seed ^ 0xd1b54a32d192ed03ull);

  std::vector<int> order(prep.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = scheduled_lr(cfg.lr, cfg.decay_factor, cfg.decay_epochs, epoch);
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.below(static_cast<int>(i))]);

    double epoch_loss = 0.0;
    size_t pos = 0;
    while (pos < order.size()) {
      const size_t batch_end = std::min(pos + static_cast<size_t>(cfg.batch), order.size());
      std::vector<Mat> grads;
      for (const Mat* p : params) grads.push_back(Mat::zeros(p->rows, p->cols));
      const double inv_batch = 1.0 / static_cast<double>(batch_end - pos);
      for (size_t b = pos; b < batch_end; ++b) {
        const GatePrep& pv = prep[order[b]];
        Tape t;
        std::vector<GateRefs> refs;
        int total = -1;
        for (int s = 0; s < S; ++s) {
          refs.push_back(tape_gate_params(t, gates[s]));
          int prob = t.sigmoid(gate_logit_t(t, refs[s], t.input(pv.z[s])));
          int loss_s = t.bce(prob, labels[order[b]][s]);
          total = (total < 0) ? loss_s : t.add(total, loss_s);
        }
        total = t.scale(total, 1.0 / S);
        epoch_loss += t.val(total)(0, 0);
        t.backward(total);
        size_t k = 0;
        for (int s = 0; s < S; ++s) {
          std::vector<int> ids = {refs[s].k0, refs[s].k1, refs[s].k2, refs[s].bias,
                                  refs[s].gat.attn};
          for (int l : refs[s].gat.layers) ids.push_back(l);
          ids.push_back(refs[s].dense_w);
          ids.push_back(refs[s].dense_b);
          for (int id : ids) {
            const Mat& gm = t.grad(id);
            for (size_t e = 0; e < gm.a.size(); ++e) grads[k].a[e] += inv_batch * gm.a[e];
            ++k;
          }
        }
      }
      opt.step(grads, lr);
      pos = batch_end;
    }
    if (loss_history) loss_history->push_back(epoch_loss / prep.size());
  }
  return gates;
}

std::vector<GateParams> train_gates(const HeadParams& head,
                                    const std::vector<VideoRecord>& data,
                                    const GateSchedule& sched, LabelMode mode,
                                    const TrainConfig& cfg,
                                    std::vector<double>* loss_history) {
  require(!data.empty(), "invalid_input", "train_gates: empty dataset");
  std::vector<GatePrep> prep;
  prep.reserve(data.size());
  for (const auto& rec : data) prep.push_back(prepare_gate_inputs(head, rec, sched, mode));
  return train_gates_prepared(prep, head.feature_dim, sched, cfg, loss_history);
}

// ---- inference -------------------------------------------------------------------

InferResult infer(const HeadParams& head, const std::vector<GateParams>& gates,
                  const GateSchedule& sched, const VideoRecord& rec,
                  const CostModel& cost, LabelMode mode, bool cache_local) {
  sched.validate();
  require(static_cast<int>(gates.size()) == sched.gates, "invalid_input",
          "infer: gate count does not match schedule");
  InferResult out;
  out.record.video_id = rec.id;
  out.global = global_path(head, rec.global_feats);

  PolicyState st = policy_init(out.global.wids, rec.global_feats);
  std::vector<FrameLocalSummary> locals;  // aligned with selection order
  std::vector<Vec> rho_hist;
  std::vector<int> sel;
  int exit_gate = sched.gates;

  for (int s = 1; s <= sched.gates; ++s) {
    sel = select_for_gate(st, sched.q[s - 1]);
    if (cache_local) {
      for (size_t i = locals.size(); i < sel.size(); ++i)
        locals.push_back(local_frame(head, rec.object_feats[sel[i]]));
    } else {
      locals.clear();
      for (int f : sel) locals.push_back(local_frame(head, rec.object_feats[f]));
    }
    Mat etas(static_cast<int>(sel.size()), head.feature_dim);
    for (size_t i = 0; i < sel.size(); ++i)
      for (int j = 0; j < head.feature_dim; ++j) etas(static_cast<int>(i), j) = locals[i].eta[j];
    rho_hist.push_back(local_video(head, etas));

    Mat z(s + 1, head.feature_dim);
    for (int j = 0; j < head.feature_dim; ++j) z(0, j) = out.global.delta[j];
    for (int r = 1; r <= s; ++r)
      for (int j = 0; j < head.feature_dim; ++j) z(r, j) = rho_hist[r - 1][j];
    double g = gate_forward(gates[s - 1], z);
    out.record.gate_outputs.push_back(g);
    if (g > sched.threshold) {
      exit_gate = s;
      break;
    }
  }

  out.record.exit_gate = exit_gate;
  out.record.frames_used = sel;
  out.record.scores =
      classify(head, out.global.delta, rho_hist[exit_gate - 1], mode);
  out.record.cost_units = account_cost(cost, rec.frames(), rec.objects(),
                                       static_cast<int>(sel.size()), exit_gate);
  out.locals = std::move(locals);
  return out;
}

}  // namespace gvgat
