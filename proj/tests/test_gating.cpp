#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "gvgat/gating.hpp"
#include "oracles.hpp"

using namespace gvgat;

namespace {

void zero_params(GateParams& g) {
  for (Mat* m : g.param_ptrs())
    for (auto& x : m->a) x = 0.0;
}

VideoRecord random_record(int P, int F, int K, int label, uint64_t seed) {
  Rng rng(seed);
  VideoRecord r;
  r.id = "r" + std::to_string(seed);
  r.labels = {label};
  r.global_feats = Mat::uniform(P, F, -1, 1, rng);
  for (int p = 0; p < P; ++p) {
    r.object_feats.push_back(Mat::uniform(K, F, -1, 1, rng));
    Vec d(K);
    for (int k = 0; k < K; ++k) d[k] = 1.0 - 0.05 * k;
    r.object_docs.push_back(d);
  }
  return r;
}

GateSchedule small_schedule() {
  GateSchedule s;
  s.gates = 3;
  s.q = {2, 4, 6};
  s.beta = 0.3;
  return s;
}

}  // namespace

TEST_CASE("schedule validation") {
  GateSchedule s = small_schedule();
  s.validate();
  GateSchedule bad = s;
  bad.beta = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = s;
  bad.q = {2, 2, 6};
  CHECK_THROWS_AS(bad.validate(), Error);
  bad = s;
  bad.q = {2, 4};
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("gate_forward: zero parameters give exactly 0.5; range; shape errors") {
  GateParams g = init_gate(4, 3, 5);
  Rng rng(1);
  Mat z = Mat::uniform(3, 4, -2, 2, rng);
  const double out = gate_forward(g, z);
  CHECK(out > 0.0);
  CHECK(out < 1.0);

  zero_params(g);
  CHECK(gate_forward(g, z) == 0.5);

  CHECK_THROWS_AS(gate_forward(g, Mat::uniform(2, 4, -1, 1, rng)), Error);
  CHECK_THROWS_AS(gate_forward(g, Mat::uniform(3, 5, -1, 1, rng)), Error);
}

TEST_CASE("gate_forward matches a hand-rolled trace (F=2, two rows)") {
  GateParams g = init_gate(2, 2, 9);
  Mat z(2, 2, {0.4, -0.8, 1.1, 0.3});

  // convolution by hand: row t sees rows t-1, t, t+1 (zeros outside)
  Mat conv(2, 2);
  for (int t = 0; t < 2; ++t)
    for (int j = 0; j < 2; ++j) {
      double s = g.conv_bias(0, j);
      for (int k = 0; k < 2; ++k) {
        if (t - 1 >= 0) s += z(t - 1, k) * g.conv_k0(k, j);
        s += z(t, k) * g.conv_k1(k, j);
        if (t + 1 < 2) s += z(t + 1, k) * g.conv_k2(k, j);
      }
      conv(t, j) = std::max(0.0, s);
    }
  auto [pooled, wids] = oracle::gat_trace(g.gat.attn_proj, g.gat.layer_weights, conv);
  double logit = g.dense_b(0, 0);
  for (int j = 0; j < 2; ++j) logit += pooled[j] * g.dense_w(j, 0);
  const double want = 1.0 / (1.0 + std::exp(-logit));
  CHECK(gate_forward(g, z) == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("epsilon schedule: value, monotonicity, range errors") {
  GateSchedule s = small_schedule();
  s.beta = 0.1;
  CHECK(epsilon(s, 2) == doctest::Approx(0.1 * std::exp(1.0)).epsilon(1e-12));
  for (int i = 1; i < s.gates; ++i) CHECK(epsilon(s, i + 1) > epsilon(s, i));
  CHECK_THROWS_AS(epsilon(s, 0), Error);
  CHECK_THROWS_AS(epsilon(s, 4), Error);
}

TEST_CASE("pseudolabel: boundary inclusive") {
  CHECK(pseudolabel(0.1, 0.2) == 1);
  CHECK(pseudolabel(0.3, 0.2) == 0);
  CHECK(pseudolabel(0.2, 0.2) == 1);
  CHECK_THROWS_AS(pseudolabel(-0.1, 0.2), Error);
}

TEST_CASE("gate_loss values") {
  CHECK(gate_loss({0.5, 0.5, 0.5}, {1, 0, 1}) == doctest::Approx(std::log(2.0)));
  CHECK(gate_loss({0.9999999, 1e-7}, {1, 0}) < 1e-5);
  CHECK(gate_loss({0.9, 0.2}, {1, 0}) ==
        doctest::Approx((-std::log(0.9) - std::log(0.8)) / 2).epsilon(1e-9));
  CHECK_THROWS_AS(gate_loss({0.5}, {1, 0}), Error);
}

TEST_CASE("gate gradients match finite differences") {
  Rng rng(3);
  GateParams g = init_gate(3, 2, 77);
  Mat z = Mat::uniform(2, 3, -1, 1, rng);
  const int target = 1;
  auto loss = [&]() {
    Tape t;
    GateRefs r = tape_gate_params(t, g);
    int p = t.sigmoid(gate_logit_t(t, r, t.input(z)));
    return t.val(t.bce(p, target))(0, 0);
  };
  Tape t;
  GateRefs r = tape_gate_params(t, g);
  int p = t.sigmoid(gate_logit_t(t, r, t.input(z)));
  t.backward(t.bce(p, target));
  std::vector<int> ids = {r.k0, r.k1, r.k2, r.bias, r.gat.attn};
  for (int l : r.gat.layers) ids.push_back(l);
  ids.push_back(r.dense_w);
  ids.push_back(r.dense_b);
  std::vector<Mat> grads;
  for (int id : ids) grads.push_back(t.grad(id));
  auto res = oracle::grad_check(g.param_ptrs(), loss, grads);
  CHECK_MESSAGE(res.max_rel_err < 1e-4, res.worst);
}

TEST_CASE("train_gates_prepared separates planted easy/hard evidence") {
  GateSchedule sched = small_schedule();
  const int F = 6, S = sched.gates;
  Rng rng(15);
  std::vector<GatePrep> prep;
  for (int v = 0; v < 40; ++v) {
    const bool easy = v % 2 == 0;
    GatePrep p;
    p.video_id = easy ? "v_easy" : "v_hard";
    p.is_hard = !easy;
    for (int s = 1; s <= S; ++s) {
      Mat z(s + 1, F);
      for (auto& x : z.a) x = (easy ? 1.0 : -1.0) + 0.2 * rng.gaussian();
      p.z.push_back(std::move(z));
      p.losses.push_back(easy ? 0.01 : 10.0);
    }
    prep.push_back(std::move(p));
  }
  TrainConfig cfg;
  cfg.epochs = 30;
  cfg.lr = 1e-2;
  cfg.decay_epochs = {};
  cfg.seed = 4;
  std::vector<double> hist;
  auto gates = train_gates_prepared(prep, F, sched, cfg, &hist);
  REQUIRE(static_cast<int>(gates.size()) == S);
  CHECK(hist.back() < hist.front());

  int easy_open = 0, easy_total = 0;
  for (const auto& p : prep) {
    if (p.is_hard) continue;
    ++easy_total;
    if (gate_forward(gates[0], p.z[0]) > sched.threshold) ++easy_open;
  }
  CHECK(easy_open >= (easy_total * 8) / 10);
}

TEST_CASE("train_gates: head untouched, deterministic, rejects empty data") {
  HeadParams head = init_head(6, 2, 50);
  const uint64_t before = head_checksum(head);
  std::vector<VideoRecord> data;
  for (int v = 0; v < 6; ++v) data.push_back(random_record(8, 6, 2, v % 2, 100 + v));
  GateSchedule sched = small_schedule();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 8;
  auto g1 = train_gates(head, data, sched, LabelMode::Single, cfg);
  CHECK(head_checksum(head) == before);
  auto g2 = train_gates(head, data, sched, LabelMode::Single, cfg);
  CHECK(gates_checksum(g1) == gates_checksum(g2));
  CHECK_THROWS_AS(train_gates(head, {}, sched, LabelMode::Single, cfg), Error);
}

TEST_CASE("infer: forced last gate, early exit, cost monotonicity") {
  HeadParams head = init_head(5, 2, 33);
  GateSchedule sched = small_schedule();
  VideoRecord rec = random_record(10, 5, 3, 0, 7);
  CostModel cost;

  std::vector<GateParams> gates;
  for (int s = 1; s <= sched.gates; ++s) {
    gates.push_back(init_gate(5, s + 1, 60 + s));
    zero_params(gates.back());
  }
  // all outputs exactly 0.5: strict threshold never fires, forced exit at S
  InferResult forced = infer(head, gates, sched, rec, cost, LabelMode::Single);
  CHECK(forced.record.exit_gate == 3);
  CHECK(forced.record.frames_used.size() == 6);
  CHECK(forced.record.gate_outputs.size() == 3);
  for (double g : forced.record.gate_outputs) CHECK(g == 0.5);

  // open gate 1 via its dense bias
  gates[0].dense_b(0, 0) = 5.0;
  InferResult early = infer(head, gates, sched, rec, cost, LabelMode::Single);
  CHECK(early.record.exit_gate == 1);
  CHECK(early.record.frames_used.size() == 2);
  CHECK(early.record.gate_outputs.size() == 1);
  CHECK(early.record.gate_outputs[0] > sched.threshold);

  // gate 2 instead
  gates[0].dense_b(0, 0) = 0.0;
  gates[1].dense_b(0, 0) = 5.0;
  InferResult mid = infer(head, gates, sched, rec, cost, LabelMode::Single);
  CHECK(mid.record.exit_gate == 2);

  CHECK(early.record.cost_units < mid.record.cost_units);
  CHECK(mid.record.cost_units < forced.record.cost_units);
  // early exit never costs more than running every gate
  const double all_gates =
      account_cost(cost, rec.frames(), rec.objects(), 6, sched.gates);
  CHECK(early.record.cost_units <= all_gates);
  CHECK(forced.record.cost_units == doctest::Approx(all_gates));

  // scores are a proper distribution in single-label mode
  double sum = 0;
  for (double s : early.record.scores) sum += s;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("local-feature caching preserves scores bit-for-bit") {
  HeadParams head = init_head(6, 3, 21);
  GateSchedule sched = small_schedule();
  CostModel cost;
  std::vector<GateParams> gates;
  for (int s = 1; s <= sched.gates; ++s) gates.push_back(init_gate(6, s + 1, 90 + s));
  for (int v = 0; v < 10; ++v) {
    VideoRecord rec = random_record(9, 6, 3, v % 3, 500 + v);
    InferResult with = infer(head, gates, sched, rec, cost, LabelMode::Single, true);
    InferResult without = infer(head, gates, sched, rec, cost, LabelMode::Single, false);
    REQUIRE(with.record.exit_gate == without.record.exit_gate);
    REQUIRE(with.record.scores.size() == without.record.scores.size());
    for (size_t i = 0; i < with.record.scores.size(); ++i)
      CHECK(with.record.scores[i] == without.record.scores[i]);
  }
}

TEST_CASE("prepare_gate_inputs: shapes and loss layout") {
  HeadParams head = init_head(5, 2, 44);
  GateSchedule sched = small_schedule();
  VideoRecord rec = random_record(8, 5, 2, 1, 77);
  GatePrep p = prepare_gate_inputs(head, rec, sched, LabelMode::Single);
  REQUIRE(static_cast<int>(p.z.size()) == sched.gates);
  for (int s = 1; s <= sched.gates; ++s) {
    CHECK(p.z[s - 1].rows == s + 1);
    CHECK(p.z[s - 1].cols == 5);
    // row 0 is always the global video embedding
    for (int j = 0; j < 5; ++j) CHECK(p.z[s - 1](0, j) == p.delta[j]);
  }
  CHECK(p.losses.size() == 3);
  for (double l : p.losses) CHECK(l >= 0.0);
  CHECK(p.frames.size() == 6);
}
