#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "gvgat/numkernel.hpp"

namespace gvgat {

enum class LabelMode { Single, Multi };

inline std::string to_string(LabelMode m) { return m == LabelMode::Single ? "single" : "multi"; }
inline LabelMode label_mode_from_string(const std::string& s) {
  if (s == "single") return LabelMode::Single;
  if (s == "multi") return LabelMode::Multi;
  fail("invalid_input", "label_mode must be 'single' or 'multi': " + s);
}

// Per-frame object metadata (sidecar file; optional).
struct FrameMeta {
  std::vector<std::string> object_names;               // length K
  std::vector<std::array<float, 4>> object_boxes;      // length K, xywh; may be empty
};

struct VideoRecord {
  std::string id;
  std::vector<int> labels;          // single-label mode: exactly one entry
  Mat global_feats;                 // P x F
  std::vector<Mat> object_feats;    // P entries of K x F, rows sorted by DoC desc
  std::vector<Vec> object_docs;     // P entries of K, descending
  std::vector<FrameMeta> meta;      // empty or P entries

  int frames() const { return global_feats.rows; }
  int feature_dim() const { return global_feats.cols; }
  int objects() const { return object_feats.empty() ? 0 : object_feats[0].rows; }
  bool has_meta() const { return !meta.empty(); }
};

// "easy"/"hard" difficulty is encoded in synthetic video ids.
inline bool is_hard_video(const VideoRecord& r) {
  return r.id.size() >= 5 && r.id.substr(r.id.size() - 5) == "_hard";
}

struct DatasetInfo {
  int classes = 0;
  LabelMode mode = LabelMode::Single;
};

struct LoadResult {
  std::vector<VideoRecord> records;
  std::optional<DatasetInfo> info;
  std::vector<std::string> warnings;  // per-file rejection diagnostics
};

// Binary feature-file format ("GVGF"): see save_video for the layout.
void save_video(const VideoRecord& rec, const std::string& path);
VideoRecord load_video(const std::string& path);
void save_dataset(const std::vector<VideoRecord>& recs, const DatasetInfo& info,
                  const std::string& dir);
LoadResult load_dataset(const std::string& dir);

// Validates the record invariants; throws Error("invalid_input", ...) on violation.
void validate_record(const VideoRecord& rec);

struct SynthSpec {
  int classes = 4;
  int videos = 400;
  int frames = 30;
  int dims = 64;
  int objects = 8;
  double hard_fraction = 0.3;  // difficulty mix: fraction of "hard" videos
  uint64_t seed = 1234;
  double noise = 0.1;          // per-frame feature noise
  double object_noise = 0.15;  // per-object noise around the frame feature
  double salient_scale = 2.0;  // class-direction strength of the planted object
  double easy_event_fraction = 0.7;
  double hard_event_fraction = 0.1;
  double hard_event_noise_mult = 1.0;  // >1: hard videos carry a noisier event signal
  LabelMode mode = LabelMode::Single;
};

// Planted-structure generator: each class has a unit event direction; easy
// videos carry it in most frames, hard videos in few frames plus a tight
// distractor cluster borrowed from another class's direction.
std::vector<VideoRecord> synth_dataset(const SynthSpec& spec);

// The class directions the generator plants (rows: G x F), reproducible
// from the same seed; exposed so tests can check separability in closed form.
Mat synth_class_directions(int classes, int dims, uint64_t seed);

}  // namespace gvgat
