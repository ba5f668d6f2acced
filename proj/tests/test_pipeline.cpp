#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "gvgat/config.hpp"
#include "gvgat/model_io.hpp"
#include "gvgat/report.hpp"
#include "oracles.hpp"

using namespace gvgat;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& tag) {
  fs::path d = fs::temp_directory_path() / ("gvgat_test_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

SynthSpec small_spec(uint64_t seed, int videos = 12) {
  SynthSpec s;
  s.classes = 2;
  s.videos = videos;
  s.frames = 8;
  s.dims = 12;
  s.objects = 3;
  s.seed = seed;
  return s;
}

bool mats_equal(const Mat& a, const Mat& b) {
  return a.rows == b.rows && a.cols == b.cols && a.a == b.a;
}

}  // namespace

TEST_CASE("dataset round-trip is bit-exact, metadata included") {
  auto data = synth_dataset(small_spec(5));
  fs::path dir = temp_dir("roundtrip");
  save_dataset(data, {2, LabelMode::Single}, dir.string());
  LoadResult res = load_dataset(dir.string());
  REQUIRE(res.records.size() == data.size());
  REQUIRE(res.info.has_value());
  CHECK(res.info->classes == 2);
  CHECK(res.warnings.empty());
  for (size_t i = 0; i < data.size(); ++i) {
    const auto& a = data[i];
    const auto& b = res.records[i];
    CHECK(a.id == b.id);
    CHECK(a.labels == b.labels);
    CHECK(mats_equal(a.global_feats, b.global_feats));
    REQUIRE(a.object_feats.size() == b.object_feats.size());
    for (size_t p = 0; p < a.object_feats.size(); ++p) {
      CHECK(mats_equal(a.object_feats[p], b.object_feats[p]));
      CHECK(a.object_docs[p] == b.object_docs[p]);
      CHECK(a.meta[p].object_names == b.meta[p].object_names);
    }
  }
}

TEST_CASE("load_dataset: empty directory warns; corrupt files are rejected per file") {
  fs::path empty = temp_dir("empty");
  LoadResult r = load_dataset(empty.string());
  CHECK(r.records.empty());
  CHECK(!r.warnings.empty());

  auto data = synth_dataset(small_spec(6, 3));
  fs::path dir = temp_dir("corrupt");
  save_dataset(data, {2, LabelMode::Single}, dir.string());
  std::ofstream bad(dir / "aaa_bad.gvgf", std::ios::binary);
  bad << "not a feature file";
  bad.close();
  LoadResult r2 = load_dataset(dir.string());
  CHECK(r2.records.size() == 3);
  REQUIRE(r2.warnings.size() == 1);
  CHECK(r2.warnings[0].find("aaa_bad") != std::string::npos);
}

TEST_CASE("validate_record: varying K and unsorted DoCs rejected") {
  auto data = synth_dataset(small_spec(7, 1));
  VideoRecord rec = data[0];
  validate_record(rec);

  VideoRecord vary = rec;
  vary.object_feats[1] = Mat::zeros(rec.objects() + 1, rec.feature_dim());
  for (auto& x : vary.object_feats[1].a) x = 0.5;
  vary.object_docs[1] = Vec(rec.objects() + 1, 0.5);
  CHECK_THROWS_AS(validate_record(vary), Error);

  VideoRecord unsorted = rec;
  std::swap(unsorted.object_docs[0][0], unsorted.object_docs[0].back());
  CHECK_THROWS_AS(validate_record(unsorted), Error);

  VideoRecord zero = rec;
  for (int j = 0; j < zero.feature_dim(); ++j) zero.global_feats(0, j) = 0.0;
  CHECK_THROWS_AS(validate_record(zero), Error);
}

TEST_CASE("synth_dataset: determinism and closed-form separability") {
  auto a = synth_dataset(small_spec(9));
  auto b = synth_dataset(small_spec(9));
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].id == b[i].id);
    CHECK(mat_checksum(a[i].global_feats) == mat_checksum(b[i].global_feats));
  }

  // all-easy two-class data: argmax over planted direction dot products wins
  SynthSpec easy = small_spec(11, 40);
  easy.hard_fraction = 0.0;
  auto data = synth_dataset(easy);
  Mat dirs = synth_class_directions(easy.classes, easy.dims, easy.seed);
  int correct = 0;
  for (const auto& rec : data) {
    Vec mean(easy.dims, 0.0);
    for (int p = 0; p < rec.frames(); ++p)
      for (int j = 0; j < easy.dims; ++j) mean[j] += rec.global_feats(p, j) / rec.frames();
    int am = 0;
    double best = -1e300;
    for (int g = 0; g < easy.classes; ++g) {
      double d = 0;
      for (int j = 0; j < easy.dims; ++j) d += dirs(g, j) * mean[j];
      if (d > best) {
        best = d;
        am = g;
      }
    }
    if (am == rec.labels[0]) ++correct;
  }
  CHECK(correct == 40);

  CHECK_THROWS_AS(synth_dataset(SynthSpec{.classes = 0}), Error);
}

TEST_CASE("top1 examples") {
  std::vector<Vec> s = {{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}};
  CHECK(top1(s, {{0}, {1}, {0}}) == doctest::Approx(1.0));
  CHECK(top1(s, {{1}, {0}, {1}}) == doctest::Approx(0.0));
  CHECK(top1(s, {{0}, {1}, {1}}) == doctest::Approx(2.0 / 3));
  CHECK_THROWS_AS(top1(s, {{0, 1}, {1}, {0}}), Error);
}

TEST_CASE("mean_ap: hand values and exclusions") {
  // perfect ranking, two classes
  std::vector<Vec> perfect = {{0.9, 0.1}, {0.8, 0.7}, {0.1, 0.9}, {0.2, 0.8}};
  CHECK(mean_ap(perfect, {{0}, {0}, {1}, {1}}) == doctest::Approx(1.0));

  // single class, positives end up at ranks 1 and 3 of 4
  std::vector<Vec> s = {{0.9}, {0.8}, {0.7}, {0.6}};
  double ap = mean_ap(s, {{0}, {}, {0}, {}});
  CHECK(ap == doctest::Approx(5.0 / 6).epsilon(1e-12));

  // class 1 has no positives: excluded with a warning
  std::vector<std::string> warn;
  std::vector<Vec> s2 = {{0.9, 0.5}, {0.1, 0.6}};
  double m = mean_ap(s2, {{0}, {}}, &warn);
  CHECK(m == doctest::Approx(1.0));
  CHECK(!warn.empty());
}

TEST_CASE("mean_ap matches the enumeration oracle on random instances") {
  Rng rng(404);
  for (int trial = 0; trial < 250; ++trial) {
    const int n = 2 + rng.below(19);  // 2..20
    const int g = 1 + rng.below(5);   // 1..5
    std::vector<Vec> scores(n, Vec(g));
    std::vector<std::vector<int>> labels(n);
    bool any = false;
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < g; ++c) {
        scores[i][c] = rng.below(6) / 5.0;  // coarse grid forces score ties
        if (rng.uniform() < 0.35) labels[i].push_back(c), any = true;
      }
    }
    if (!any) labels[0].push_back(0);
    const double got = mean_ap(scores, labels);
    const double want = oracle::map_enumerate(scores, labels);
    CHECK(std::fabs(got - want) <= 1e-12);
  }
}

TEST_CASE("cost model: degenerate equality and published ratios") {
  CostModel m;
  m.gate = 0.0;
  CHECK(account_cost(m, 30, 8, 30, 5) == doctest::Approx(baseline_cost(m, 30, 8)));

  CostModel d;  // defaults, K = 50 as in the reference configurations
  const double r1 = baseline_cost(d, 30, 50) / account_cost(d, 30, 50, 7, 3);
  CHECK(r1 == doctest::Approx(34.4 / 8.7).epsilon(0.10));
  const double r2 = baseline_cost(d, 120, 50) / account_cost(d, 120, 50, 20, 4);
  CHECK(r2 == doctest::Approx(137.4 / 24.8).epsilon(0.10));
}

TEST_CASE("config: defaults validate, file round-trip, stable hash") {
  RunConfig cfg = default_config();
  cfg.schedule.validate();
  CHECK(config_hash(cfg) == config_hash(cfg));

  fs::path dir = temp_dir("config");
  std::ofstream os(dir / "c.json");
  os << config_to_json(cfg);
  os.close();
  RunConfig back = load_config((dir / "c.json").string());
  CHECK(config_hash(back) == config_hash(cfg));

  std::ofstream bad(dir / "bad.json");
  bad << "{nope";
  bad.close();
  CHECK_THROWS_AS(load_config((dir / "bad.json").string()), Error);
}

TEST_CASE("model file round-trip is bit-exact") {
  ModelFile m;
  m.head = init_head(6, 3, 77);
  m.schedule.gates = 3;
  m.schedule.q = {2, 4, 6};
  m.schedule.beta = 0.41;
  m.schedule.threshold = 0.6;
  m.mode = LabelMode::Multi;
  m.config_hash = 0xdeadbeefcafeull;
  for (int s = 1; s <= 3; ++s) m.gates.push_back(init_gate(6, s + 1, 300 + s));

  fs::path dir = temp_dir("model");
  const std::string path = (dir / "m.gvgm").string();
  save_model(m, path);
  ModelFile r = load_model(path);
  CHECK(head_checksum(r.head) == head_checksum(m.head));
  CHECK(gates_checksum(r.gates) == gates_checksum(m.gates));
  CHECK(r.schedule.q == m.schedule.q);
  CHECK(r.schedule.beta == m.schedule.beta);
  CHECK(r.schedule.threshold == m.schedule.threshold);
  CHECK(r.mode == m.mode);
  CHECK(r.config_hash == m.config_hash);

  std::ofstream bad(dir / "bad.gvgm", std::ios::binary);
  bad << "XXXX";
  bad.close();
  CHECK_THROWS_AS(load_model((dir / "bad.gvgm").string()), Error);
}

TEST_CASE("eval_run: count bookkeeping and byte-identical determinism") {
  auto data = synth_dataset(small_spec(31, 10));
  HeadParams head = init_head(12, 2, 8);
  GateSchedule sched;
  sched.gates = 3;
  sched.q = {2, 4, 6};
  std::vector<GateParams> gates;
  for (int s = 1; s <= 3; ++s) gates.push_back(init_gate(12, s + 1, 40 + s));
  CostModel cost;

  RunReport r1 = eval_run(head, gates, sched, data, cost, LabelMode::Single);
  int total = 0;
  for (int c : r1.per_gate_counts) total += c;
  CHECK(total == 10);
  double avg = 0;
  for (int s = 0; s < 3; ++s) avg += r1.per_gate_counts[s] * std::min(sched.q[s], 8);
  CHECK(r1.avg_frames == doctest::Approx(avg / 10));
  CHECK(r1.cost_ratio == doctest::Approx(r1.baseline_total_cost / r1.total_cost));
  CHECK(r1.total_cost <= r1.baseline_total_cost + 10 * 3 * cost.gate);
  CHECK(r1.easy_count + r1.hard_count == 10);

  RunReport r2 = eval_run(head, gates, sched, data, cost, LabelMode::Single);
  CHECK(report_csv(r1) == report_csv(r2));
  CHECK(report_json(r1) == report_json(r2));
}

TEST_CASE("ablation: full budget makes the non-gated policies agree") {
  auto data = synth_dataset(small_spec(53, 8));
  HeadParams head = init_head(12, 2, 13);
  GateSchedule sched;
  sched.gates = 2;
  sched.q = {2, 4};
  TrainConfig cfg;
  cfg.epochs = 2;
  auto cells = ablation_run(head, data, sched, LabelMode::Single,
                            {"random", "wid", "random_local", "wid_local", "proposed"},
                            {8}, cfg, 1);
  REQUIRE(cells.size() == 5);
  for (size_t i = 1; i < cells.size(); ++i)
    CHECK(cells[i].metric == doctest::Approx(cells[0].metric));
}

TEST_CASE("explanations: full object ranking, planted salient object, frames-only") {
  SynthSpec spec = small_spec(71, 40);
  spec.hard_fraction = 0.0;
  auto data = synth_dataset(spec);
  TrainConfig cfg;
  cfg.epochs = 40;
  cfg.lr = 3e-3;
  cfg.decay_epochs = {30};
  cfg.seed = 6;
  HeadParams head = train_head(data, spec.dims, spec.classes, LabelMode::Single, cfg);

  GateSchedule sched;
  sched.gates = 2;
  sched.q = {2, 4};
  std::vector<GateParams> gates;
  for (int s = 1; s <= 2; ++s) gates.push_back(init_gate(spec.dims, s + 1, 90 + s));
  CostModel cost;
  std::vector<InferResult> results;
  for (const auto& rec : data)
    results.push_back(infer(head, gates, sched, rec, cost, LabelMode::Single));

  auto exps = export_explanations(results, data, 2, spec.objects);
  REQUIRE(exps.size() == data.size());
  int first = 0, events = 0;
  for (size_t v = 0; v < exps.size(); ++v) {
    CHECK(!exps[v].frames_only);
    for (const auto& fe : exps[v].frames) {
      // full ranking is a permutation of all object indices
      std::vector<int> sorted = fe.top_objects;
      std::sort(sorted.begin(), sorted.end());
      std::vector<int> want(spec.objects);
      for (int k = 0; k < spec.objects; ++k) want[k] = k;
      CHECK(sorted == want);
      // planted salient object should usually lead the ranking
      const auto& names = data[v].meta[fe.frame].object_names;
      auto it = std::find(names.begin(), names.end(), "salient");
      if (it != names.end()) {
        ++events;
        if (fe.top_objects[0] == static_cast<int>(it - names.begin())) ++first;
      }
    }
  }
  REQUIRE(events > 20);
  CHECK(first * 10 >= events * 8);  // >= 80%

  // no metadata: frames-only with a warning
  auto stripped = data;
  for (auto& rec : stripped) rec.meta.clear();
  std::vector<std::string> warn;
  auto exps2 = export_explanations(results, stripped, 2, 3, &warn);
  CHECK(exps2[0].frames_only);
  CHECK(!warn.empty());
  CHECK(!exps2[0].frames.empty());
  CHECK(exps2[0].frames[0].top_objects.empty());
}

TEST_CASE("all_frames_scores shape and distribution") {
  auto data = synth_dataset(small_spec(91, 4));
  HeadParams head = init_head(12, 2, 3);
  auto scores = all_frames_scores(head, data, LabelMode::Single);
  REQUIRE(scores.size() == 4);
  for (const auto& s : scores) {
    REQUIRE(s.size() == 2);
    CHECK(s[0] + s[1] == doctest::Approx(1.0).epsilon(1e-9));
  }
}
