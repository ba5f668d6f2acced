#include "gvgat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <filesystem>
#include <fstream>

#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace gvgat {

// ---- little-endian primitives -----------------------------------------------

namespace {

void put_u16(std::ostream& os, uint16_t v) {
  unsigned char b[2] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8)};
  os.write(reinterpret_cast<char*>(b), 2);
}
void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 4);
}
void put_f32(std::ostream& os, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(os, v);
}
uint16_t get_u16(std::istream& is) {
  unsigned char b[2];
  is.read(reinterpret_cast<char*>(b), 2);
  return static_cast<uint16_t>(b[0] | (b[1] << 8));
}
uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
float get_f32(std::istream& is) {
  uint32_t v = get_u32(is);
  float f;
  std::memcpy(&f, &v, 4);
  return f;
}

std::string meta_path(const std::string& gvgf_path) {
  std::string p = gvgf_path;
  const std::string ext = ".gvgf";
  if (p.size() > ext.size() && p.substr(p.size() - ext.size()) == ext)
    p.resize(p.size() - ext.size());
  return p + ".meta.json";
}

}  // namespace

// ---- validation ----------------------------------------------------------------

void validate_record(const VideoRecord& rec) {
  const int P = rec.global_feats.rows;
  const int F = rec.global_feats.cols;
  require(P >= 1 && F >= 1, "invalid_input", rec.id + ": empty feature matrix");
  require(!rec.labels.empty(), "invalid_input", rec.id + ": no labels");
  for (int l : rec.labels)
    require(l >= 0, "invalid_input", rec.id + ": negative label index");
  require(static_cast<int>(rec.object_feats.size()) == P, "invalid_input",
          rec.id + ": object_feats frame count mismatch");
  require(static_cast<int>(rec.object_docs.size()) == P, "invalid_input",
          rec.id + ": object_docs frame count mismatch");
  const int K = rec.object_feats[0].rows;
  require(K >= 1, "invalid_input", rec.id + ": no objects");
  for (int p = 0; p < P; ++p) {
    require(rec.object_feats[p].rows == K, "invalid_input",
            rec.id + ": K varies across frames");
    require(rec.object_feats[p].cols == F, "invalid_input",
            rec.id + ": object feature dimension mismatch");
    require(static_cast<int>(rec.object_docs[p].size()) == K, "invalid_input",
            rec.id + ": DoC length mismatch");
    for (int k = 1; k < K; ++k)
      require(rec.object_docs[p][k] <= rec.object_docs[p][k - 1], "invalid_input",
              rec.id + ": DoCs not sorted descending (frame " + std::to_string(p) + ")");
    double gn = 0.0;
    for (int j = 0; j < F; ++j) gn += rec.global_feats(p, j) * rec.global_feats(p, j);
    require(gn > 0.0, "invalid_input",
            rec.id + ": zero-norm global feature row (frame " + std::to_string(p) + ")");
    for (int k = 0; k < K; ++k) {
      double on = 0.0;
      for (int j = 0; j < F; ++j) on += rec.object_feats[p](k, j) * rec.object_feats[p](k, j);
      require(on > 0.0, "invalid_input",
              rec.id + ": zero-norm object feature row (frame " + std::to_string(p) + ")");
    }
  }
  if (rec.has_meta())
    require(static_cast<int>(rec.meta.size()) == P, "invalid_input",
            rec.id + ": metadata frame count mismatch");
}

// ---- binary format ----------------------------------------------------------------
//
//   magic "GVGF" | version u16 (=1) | P u32 | F u32 | K u32
//   | label_count u32 | label u32 ...
//   | global features P*F f32 row-major
//   | per frame: K DoC f32 (descending), then K*F f32 object features
//
// All multi-byte values little-endian. Metadata lives in <id>.meta.json.

void save_video(const VideoRecord& rec, const std::string& path) {
  validate_record(rec);
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "io", "cannot open for write: " + path);
  os.write("GVGF", 4);
  put_u16(os, 1);
  const int P = rec.frames(), F = rec.feature_dim(), K = rec.objects();
  put_u32(os, static_cast<uint32_t>(P));
  put_u32(os, static_cast<uint32_t>(F));
  put_u32(os, static_cast<uint32_t>(K));
  put_u32(os, static_cast<uint32_t>(rec.labels.size()));
  for (int l : rec.labels) put_u32(os, static_cast<uint32_t>(l));
  for (double x : rec.global_feats.a) put_f32(os, static_cast<float>(x));
  for (int p = 0; p < P; ++p) {
    for (double d : rec.object_docs[p]) put_f32(os, static_cast<float>(d));
    for (double x : rec.object_feats[p].a) put_f32(os, static_cast<float>(x));
  }
  require(static_cast<bool>(os), "io", "write failed: " + path);

  if (rec.has_meta()) {
    json meta = json::array();
    for (const auto& fm : rec.meta) {
      json f;
      f["names"] = fm.object_names;
      if (!fm.object_boxes.empty()) {
        json boxes = json::array();
        for (const auto& b : fm.object_boxes) boxes.push_back({b[0], b[1], b[2], b[3]});
        f["boxes"] = boxes;
      }
      meta.push_back(f);
    }
    std::ofstream ms(meta_path(path));
    ms << json{{"id", rec.id}, {"frames", meta}}.dump(2) << "\n";
  }
}

VideoRecord load_video(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "io", "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  require(is && std::memcmp(magic, "GVGF", 4) == 0, "invalid_input",
          path + ": bad magic (not a GVGF file)");
  const uint16_t version = get_u16(is);
  require(version == 1, "invalid_input", path + ": unsupported format version");
  const uint32_t P = get_u32(is), F = get_u32(is), K = get_u32(is);
  require(is && P >= 1 && F >= 1 && K >= 1 && P < (1u << 24) && F < (1u << 20) &&
              K < (1u << 20),
          "invalid_input", path + ": malformed header");
  VideoRecord rec;
  rec.id = fs::path(path).stem().string();
  const uint32_t nlabels = get_u32(is);
  require(is && nlabels >= 1 && nlabels < (1u << 16), "invalid_input",
          path + ": malformed label count");
  for (uint32_t i = 0; i < nlabels; ++i) rec.labels.push_back(static_cast<int>(get_u32(is)));
  rec.global_feats = Mat(static_cast<int>(P), static_cast<int>(F));
  for (auto& x : rec.global_feats.a) x = get_f32(is);
  for (uint32_t p = 0; p < P; ++p) {
    Vec docs(K);
    for (auto& d : docs) d = get_f32(is);
    Mat objs(static_cast<int>(K), static_cast<int>(F));
    for (auto& x : objs.a) x = get_f32(is);
    rec.object_docs.push_back(std::move(docs));
    rec.object_feats.push_back(std::move(objs));
  }
  require(static_cast<bool>(is), "invalid_input", path + ": truncated file");

  const std::string mp = meta_path(path);
  if (fs::exists(mp)) {
    std::ifstream ms(mp);
    json j = json::parse(ms, nullptr, false);
    require(!j.is_discarded(), "invalid_input", mp + ": malformed metadata JSON");
    for (const auto& f : j.at("frames")) {
      FrameMeta fm;
      fm.object_names = f.at("names").get<std::vector<std::string>>();
      if (f.contains("boxes"))
        for (const auto& b : f["boxes"])
          fm.object_boxes.push_back({b[0].get<float>(), b[1].get<float>(),
                                     b[2].get<float>(), b[3].get<float>()});
      rec.meta.push_back(std::move(fm));
    }
  }
  validate_record(rec);
  return rec;
}

void save_dataset(const std::vector<VideoRecord>& recs, const DatasetInfo& info,
                  const std::string& dir) {
  fs::create_directories(dir);
  for (const auto& rec : recs) save_video(rec, (fs::path(dir) / (rec.id + ".gvgf")).string());
  std::ofstream ms(fs::path(dir) / "dataset.json");
  ms << json{{"classes", info.classes},
             {"label_mode", to_string(info.mode)},
             {"videos", recs.size()}}
            .dump(2)
     << "\n";
}

LoadResult load_dataset(const std::string& dir) {
  LoadResult out;
  require(fs::exists(dir) && fs::is_directory(dir), "io", "not a directory: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.path().extension() == ".gvgf") files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty()) out.warnings.push_back(dir + ": no .gvgf files found");
  for (const auto& f : files) {
    try {
      out.records.push_back(load_video(f));
    } catch (const Error& e) {
      out.warnings.push_back(std::string("rejected ") + f + ": " + e.what());
    }
  }
  const fs::path manifest = fs::path(dir) / "dataset.json";
  if (fs::exists(manifest)) {
    std::ifstream ms(manifest);
    json j = json::parse(ms, nullptr, false);
    if (!j.is_discarded()) {
      DatasetInfo info;
      info.classes = j.value("classes", 0);
      info.mode = label_mode_from_string(j.value("label_mode", "single"));
      out.info = info;
    } else {
      out.warnings.push_back(manifest.string() + ": malformed manifest");
    }
  }
  return out;
}

// ---- synthetic generator -------------------------------------------------------

Mat synth_class_directions(int classes, int dims, uint64_t seed) {
  require(classes >= 1 && dims >= classes, "invalid_input",
          "synth: need dims >= classes for orthogonal event directions");
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 11);
  Mat dirs(classes, dims);
  for (int g = 0; g < classes; ++g) {
    for (int j = 0; j < dims; ++j) dirs(g, j) = rng.gaussian();
    // Gram-Schmidt against earlier rows
    for (int h = 0; h < g; ++h) {
      double d = 0.0;
      for (int j = 0; j < dims; ++j) d += dirs(g, j) * dirs(h, j);
      for (int j = 0; j < dims; ++j) dirs(g, j) -= d * dirs(h, j);
    }
    double n = 0.0;
    for (int j = 0; j < dims; ++j) n += dirs(g, j) * dirs(g, j);
    n = std::sqrt(n);
    require(n > 1e-9, "invalid_input", "synth: degenerate direction draw");
    for (int j = 0; j < dims; ++j) dirs(g, j) /= n;
  }
  return dirs;
}

namespace {

// Features pass through float32 so saved datasets round-trip bit-exactly.
double f32(double x) { return static_cast<double>(static_cast<float>(x)); }

Vec unit_gaussian(int dims, Rng& rng) {
  Vec v(dims);
  double n = 0.0;
  for (auto& x : v) {
    x = rng.gaussian();
    n += x * x;
  }
  n = std::sqrt(n);
  for (auto& x : v) x /= (n > 0 ? n : 1.0);
  return v;
}

}  // namespace

std::vector<VideoRecord> synth_dataset(const SynthSpec& spec) {
  require(spec.classes >= 1 && spec.videos >= 1 && spec.frames >= 1 &&
              spec.dims >= 1 && spec.objects >= 1,
          "invalid_input", "synth: all counts must be >= 1");
  require(spec.hard_fraction >= 0.0 && spec.hard_fraction <= 1.0, "invalid_input",
          "synth: difficulty mix must lie in [0,1]");
  Mat dirs = synth_class_directions(spec.classes, spec.dims, spec.seed);
  Rng rng(spec.seed);
  std::vector<VideoRecord> out;
  const int P = spec.frames, F = spec.dims, K = spec.objects, G = spec.classes;

  for (int n = 0; n < spec.videos; ++n) {
    const int g = n % G;
    const bool hard = rng.uniform() < spec.hard_fraction;
    VideoRecord rec;
    {
      char buf[64];
      std::snprintf(buf, sizeof(buf), "vid_%05d_%s", n, hard ? "hard" : "easy");
      rec.id = buf;
    }
    rec.labels = {g};
    int second_label = -1;
    if (spec.mode == LabelMode::Multi && G >= 2 && rng.uniform() < 0.3) {
      second_label = (g + 1 + rng.below(G - 1)) % G;
      rec.labels.push_back(second_label);
      std::sort(rec.labels.begin(), rec.labels.end());
    }

    const double event_frac = hard ? spec.hard_event_fraction : spec.easy_event_fraction;
    int n_event = std::max(1, static_cast<int>(std::lround(event_frac * P)));
    n_event = std::min(n_event, P);
    std::vector<int> perm(P);
    for (int i = 0; i < P; ++i) perm[i] = i;
    for (int i = 0; i < P; ++i) std::swap(perm[i], perm[i + rng.below(P - i)]);
    std::vector<char> is_event(P, 0);
    for (int i = 0; i < n_event; ++i) is_event[perm[i]] = 1;

    // hard videos: distractors form tight clusters around a confuser class
    // direction, so WiD-only selection latches onto redundant frames
    int confuser = G >= 2 ? (g + 1 + rng.below(G - 1)) % G : g;
    Vec cluster2 = unit_gaussian(F, rng);

    rec.global_feats = Mat(P, F);
    std::vector<int> frame_label(P, g);  // event direction carried per frame
    for (int p = 0; p < P; ++p) {
      Vec feat(F, 0.0);
      if (is_event[p]) {
        int lab = g;
        if (second_label >= 0 && rng.uniform() < 0.5) lab = second_label;
        frame_label[p] = lab;
        const double ns = hard ? spec.noise * spec.hard_event_noise_mult : spec.noise;
        for (int j = 0; j < F; ++j)
          feat[j] = dirs(lab, j) + ns * rng.gaussian();
      } else if (hard) {
        const bool main_cluster = rng.uniform() < 0.8;
        frame_label[p] = -1;
        for (int j = 0; j < F; ++j)
          feat[j] = (main_cluster ? dirs(confuser, j) : cluster2[j]) +
                    0.3 * spec.noise * rng.gaussian();
      } else {
        Vec d = unit_gaussian(F, rng);
        frame_label[p] = -1;
        for (int j = 0; j < F; ++j) feat[j] = d[j] + spec.noise * rng.gaussian();
      }
      for (int j = 0; j < F; ++j) rec.global_feats(p, j) = f32(feat[j]);
    }

    for (int p = 0; p < P; ++p) {
      Vec docs(K);
      for (auto& d : docs) d = f32(0.3 + 0.7 * rng.uniform());
      std::sort(docs.begin(), docs.end(), std::greater<double>());
      const int salient = rng.below(K);
      Mat objs(K, F);
      FrameMeta fm;
      for (int k = 0; k < K; ++k) {
        const bool is_salient = (k == salient) && is_event[p];
        for (int j = 0; j < F; ++j) {
          double x = rec.global_feats(p, j) + spec.object_noise * rng.gaussian();
          if (is_salient) x += spec.salient_scale * dirs(frame_label[p], j);
          objs(k, j) = f32(x);
        }
        fm.object_names.push_back(is_salient ? "salient" : "object_" + std::to_string(k));
      }
      rec.object_docs.push_back(std::move(docs));
      rec.object_feats.push_back(std::move(objs));
      rec.meta.push_back(std::move(fm));
    }
    validate_record(rec);
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace gvgat
