#include "gvgat/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numeric>

#include "json.hpp"

using nlohmann::json;

namespace gvgat {

namespace {

double metric_of(const std::vector<Vec>& scores,
                 const std::vector<std::vector<int>>& labels, LabelMode mode,
                 std::vector<std::string>* warnings) {
  if (mode == LabelMode::Single) return top1(scores, labels);
  return mean_ap(scores, labels, warnings);
}

Mat rows_subset(const Mat& m, const std::vector<int>& rows) {
  Mat out(static_cast<int>(rows.size()), m.cols);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < m.cols; ++j) out(static_cast<int>(i), j) = m(rows[i], j);
  return out;
}

Vec local_video_of(const HeadParams& head, const VideoRecord& rec,
                   const std::vector<int>& frames) {
  Mat etas(static_cast<int>(frames.size()), head.feature_dim);
  for (size_t i = 0; i < frames.size(); ++i) {
    FrameLocalSummary ls = local_frame(head, rec.object_feats[frames[i]]);
    for (int j = 0; j < head.feature_dim; ++j) etas(static_cast<int>(i), j) = ls.eta[j];
  }
  return local_video(head, etas);
}

}  // namespace

std::vector<Vec> all_frames_scores(const HeadParams& head,
                                   const std::vector<VideoRecord>& data,
                                   LabelMode mode) {
  std::vector<Vec> out;
  out.reserve(data.size());
  for (const auto& rec : data) {
    GlobalSummary global = global_path(head, rec.global_feats);
    std::vector<int> all(rec.frames());
    std::iota(all.begin(), all.end(), 0);
    Vec rho = local_video_of(head, rec, all);
    out.push_back(classify(head, global.delta, rho, mode));
  }
  return out;
}

RunReport eval_run(const HeadParams& head, const std::vector<GateParams>& gates,
                   const GateSchedule& sched, const std::vector<VideoRecord>& data,
                   const CostModel& cost, LabelMode mode,
                   std::vector<InferResult>* results_out) {
  require(!data.empty(), "invalid_input", "eval_run: empty dataset");
  RunReport r;
  r.metric_name = mode == LabelMode::Single ? "top1" : "mAP";
  r.n_videos = static_cast<int>(data.size());
  r.q = sched.q;
  r.per_gate_counts.assign(sched.gates, 0);
  r.per_gate_metric.assign(sched.gates, -1.0);

  std::vector<InferResult> results;
  results.reserve(data.size());
  std::vector<Vec> scores;
  std::vector<std::vector<int>> labels;
  double frames_sum = 0.0;
  for (const auto& rec : data) {
    results.push_back(infer(head, gates, sched, rec, cost, mode));
    const ExitRecord& er = results.back().record;
    r.per_gate_counts[er.exit_gate - 1]++;
    frames_sum += static_cast<double>(er.frames_used.size());
    r.total_cost += er.cost_units;
    r.baseline_total_cost += baseline_cost(cost, rec.frames(), rec.objects());
    scores.push_back(er.scores);
    labels.push_back(rec.labels);
    const double gate_pos = static_cast<double>(er.exit_gate);
    if (is_hard_video(rec)) {
      r.hard_count++;
      r.hard_avg_exit += gate_pos;
    } else {
      r.easy_count++;
      r.easy_avg_exit += gate_pos;
    }
  }
  if (r.easy_count) r.easy_avg_exit /= r.easy_count;
  if (r.hard_count) r.hard_avg_exit /= r.hard_count;
  r.avg_frames = frames_sum / data.size();
  r.cost_ratio = r.baseline_total_cost / r.total_cost;
  r.overall_metric = metric_of(scores, labels, mode, &r.warnings);

  for (int s = 0; s < sched.gates; ++s) {
    std::vector<Vec> sub_scores;
    std::vector<std::vector<int>> sub_labels;
    for (size_t i = 0; i < results.size(); ++i)
      if (results[i].record.exit_gate == s + 1) {
        sub_scores.push_back(results[i].record.scores);
        sub_labels.push_back(labels[i]);
      }
    if (sub_scores.empty()) continue;
    try {
      r.per_gate_metric[s] = metric_of(sub_scores, sub_labels, mode, nullptr);
    } catch (const Error&) {
      r.warnings.push_back("per-gate metric undefined at gate " + std::to_string(s + 1));
    }
  }

  {
    std::vector<Vec> base = all_frames_scores(head, data, mode);
    r.all_frames_metric = metric_of(base, labels, mode, nullptr);
  }
  if (results_out) *results_out = std::move(results);
  return r;
}

// ---- serialization -----------------------------------------------------------------

namespace {
std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", x);
  return buf;
}
}  // namespace

std::string report_csv(const RunReport& r) {
  std::string out = "gate,frames,videos," + r.metric_name + "\n";
  for (size_t s = 0; s < r.q.size(); ++s) {
    out += std::to_string(s + 1) + "," + std::to_string(r.q[s]) + "," +
           std::to_string(r.per_gate_counts[s]) + ",";
    if (r.per_gate_metric[s] >= 0.0) out += fmt(r.per_gate_metric[s]);
    out += "\n";
  }
  out += "overall,,"+ std::to_string(r.n_videos) + "," + fmt(r.overall_metric) + "\n";
  out += "\nquantity,value\n";
  out += "all_frames_" + r.metric_name + "," + fmt(r.all_frames_metric) + "\n";
  out += "avg_frames," + fmt(r.avg_frames) + "\n";
  out += "total_cost," + fmt(r.total_cost) + "\n";
  out += "baseline_total_cost," + fmt(r.baseline_total_cost) + "\n";
  out += "cost_ratio," + fmt(r.cost_ratio) + "\n";
  if (r.easy_count) out += "easy_avg_exit_gate," + fmt(r.easy_avg_exit) + "\n";
  if (r.hard_count) out += "hard_avg_exit_gate," + fmt(r.hard_avg_exit) + "\n";
  return out;
}

std::string report_json(const RunReport& r) {
  json j{{"metric", r.metric_name},
         {"n_videos", r.n_videos},
         {"frames_per_gate", r.q},
         {"per_gate_counts", r.per_gate_counts},
         {"per_gate_metric", r.per_gate_metric},
         {"overall_metric", r.overall_metric},
         {"all_frames_metric", r.all_frames_metric},
         {"avg_frames", r.avg_frames},
         {"total_cost", r.total_cost},
         {"baseline_total_cost", r.baseline_total_cost},
         {"cost_ratio", r.cost_ratio},
         {"easy_count", r.easy_count},
         {"hard_count", r.hard_count},
         {"easy_avg_exit_gate", r.easy_avg_exit},
         {"hard_avg_exit_gate", r.hard_avg_exit},
         {"warnings", r.warnings}};
  return j.dump(2);
}

std::string exit_records_json(const std::vector<InferResult>& results) {
  json arr = json::array();
  for (const auto& res : results) {
    const ExitRecord& er = res.record;
    arr.push_back(json{{"video_id", er.video_id},
                       {"exit_gate", er.exit_gate},
                       {"frames_used", er.frames_used},
                       {"scores", er.scores},
                       {"gate_outputs", er.gate_outputs},
                       {"cost_units", er.cost_units}});
  }
  return arr.dump(2);
}

// ---- ablation ------------------------------------------------------------------------

std::vector<AblationCell> ablation_run(const HeadParams& head,
                                       const std::vector<VideoRecord>& data,
                                       const GateSchedule& sched, LabelMode mode,
                                       const std::vector<std::string>& policies,
                                       const std::vector<int>& budgets,
                                       const TrainConfig& gate_cfg, uint64_t seed,
                                       std::vector<std::string>* warnings) {
  require(!data.empty(), "invalid_input", "ablation_run: empty dataset");
  std::vector<AblationCell> cells;
  std::vector<std::vector<int>> labels;
  for (const auto& rec : data) labels.push_back(rec.labels);

  // global pass on all P frames, shared by every policy that needs it
  std::vector<GlobalSummary> globals;
  globals.reserve(data.size());
  for (const auto& rec : data) globals.push_back(global_path(head, rec.global_feats));

  bool want_gated = false;
  for (const auto& pol : policies) {
    if (pol == "gated") {
      want_gated = true;
      continue;
    }
    const PolicyVariant kind = policy_variant_from_string(pol);
    for (int theta : budgets) {
      std::vector<Vec> scores;
      for (size_t i = 0; i < data.size(); ++i) {
        const VideoRecord& rec = data[i];
        const int t = std::min(theta, rec.frames());
        std::vector<int> sel = baseline_select(kind, globals[i].wids, rec.global_feats,
                                               t, seed * 0x100000001b3ull + i);
        Vec delta;
        if (policy_uses_full_global(kind)) {
          delta = globals[i].delta;
        } else {
          delta = global_path(head, rows_subset(rec.global_feats, sel)).delta;
        }
        Vec rho = local_video_of(head, rec, sel);
        scores.push_back(classify(head, delta, rho, mode));
      }
      AblationCell cell;
      cell.policy = pol;
      cell.theta = theta;
      cell.avg_frames = theta;
      cell.metric = metric_of(scores, labels, mode, warnings);
      cells.push_back(cell);
    }
  }

  if (want_gated) {
    std::vector<GatePrep> prep;
    prep.reserve(data.size());
    for (const auto& rec : data) prep.push_back(prepare_gate_inputs(head, rec, sched, mode));
    const std::vector<double> beta_grid = {0.02, 0.05, 0.08, 0.12, 0.18, 0.27,
                                           0.4,  0.6,  0.9,  1.35, 2.0,  3.0};
    struct SweepPoint {
      double beta, avg_frames, metric;
    };
    std::vector<SweepPoint> sweep;
    for (double beta : beta_grid) {
      GateSchedule sw = sched;
      sw.beta = beta;
      std::vector<GateParams> gates =
          train_gates_prepared(prep, head.feature_dim, sw, gate_cfg);
      double frames_sum = 0.0;
      std::vector<Vec> scores;
      for (size_t i = 0; i < prep.size(); ++i) {
        int exit_gate = sw.gates;
        for (int s = 1; s <= sw.gates; ++s) {
          if (gate_forward(gates[s - 1], prep[i].z[s - 1]) > sw.threshold) {
            exit_gate = s;
            break;
          }
        }
        frames_sum += std::min(sw.q[exit_gate - 1], data[i].frames());
        scores.push_back(classify(head, prep[i].delta, prep[i].rho[exit_gate - 1], mode));
      }
      const double avg = frames_sum / prep.size();
      sweep.push_back({beta, avg, metric_of(scores, labels, mode, nullptr)});
    }
    for (int theta : budgets) {
      const SweepPoint* best = nullptr;
      for (const auto& pt : sweep)
        if (!best || std::fabs(pt.avg_frames - theta) < std::fabs(best->avg_frames - theta))
          best = &pt;
      AblationCell cell;
      cell.policy = "gated";
      cell.theta = theta;
      cell.beta = best->beta;
      cell.avg_frames = best->avg_frames;
      cell.metric = best->metric;
      if (std::fabs(best->avg_frames - theta) > 1.0) {
        cell.note = "no beta reached the target frame budget within 1 frame";
        if (warnings) warnings->push_back("gated theta=" + std::to_string(theta) + ": " + cell.note);
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

std::string ablation_csv(const std::vector<AblationCell>& cells) {
  std::string out = "policy,theta,metric,avg_frames,beta,note\n";
  for (const auto& c : cells) {
    out += c.policy + "," + std::to_string(c.theta) + "," + fmt(c.metric) + "," +
           fmt(c.avg_frames) + ",";
    if (c.policy == "gated") out += fmt(c.beta);
    out += "," + c.note + "\n";
  }
  return out;
}

// ---- explanations -----------------------------------------------------------------------

std::vector<Explanation> export_explanations(const std::vector<InferResult>& results,
                                             const std::vector<VideoRecord>& data,
                                             int top_frames, int top_objects,
                                             std::vector<std::string>* warnings) {
  std::map<std::string, const VideoRecord*> by_id;
  for (const auto& rec : data) by_id[rec.id] = &rec;

  std::vector<Explanation> out;
  for (const auto& res : results) {
    Explanation exp;
    exp.video_id = res.record.video_id;
    auto it = by_id.find(exp.video_id);
    const VideoRecord* rec = it == by_id.end() ? nullptr : it->second;
    if (!rec || !rec->has_meta()) {
      exp.frames_only = true;
      if (warnings)
        warnings->push_back(exp.video_id + ": object metadata missing; frames-only explanation");
    }
    const int nf = std::min<int>(top_frames, static_cast<int>(res.record.frames_used.size()));
    for (int i = 0; i < nf; ++i) {
      Explanation::FrameExp fe;
      fe.frame = res.record.frames_used[i];
      if (!exp.frames_only) {
        const Vec& wids = res.locals[i].obj_wids;
        std::vector<int> order(wids.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return wids[a] > wids[b]; });
        const int no = std::min<int>(top_objects, static_cast<int>(order.size()));
        for (int k = 0; k < no; ++k) {
          fe.top_objects.push_back(order[k]);
          fe.object_names.push_back(rec->meta[fe.frame].object_names[order[k]]);
        }
      }
      exp.frames.push_back(std::move(fe));
    }
    out.push_back(std::move(exp));
  }
  return out;
}

std::string explanations_json(const std::vector<Explanation>& exps) {
  json arr = json::array();
  for (const auto& e : exps) {
    json frames = json::array();
    for (const auto& f : e.frames)
      frames.push_back(json{{"frame", f.frame},
                            {"top_objects", f.top_objects},
                            {"object_names", f.object_names}});
    arr.push_back(json{{"video_id", e.video_id},
                       {"frames", frames},
                       {"frames_only", e.frames_only}});
  }
  return arr.dump(2);
}

}  // namespace gvgat
