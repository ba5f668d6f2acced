#include "gvgat/model_io.hpp"

#include <cstring>
#include <fstream>

namespace gvgat {

namespace {

void put_u32(std::ostream& os, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 4);
}
void put_u64(std::ostream& os, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  os.write(reinterpret_cast<char*>(b), 8);
}
void put_f64(std::ostream& os, double d) {
  uint64_t v;
  std::memcpy(&v, &d, 8);
  put_u64(os, v);
}
uint32_t get_u32(std::istream& is) {
  unsigned char b[4];
  is.read(reinterpret_cast<char*>(b), 4);
  return b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<uint32_t>(b[3]) << 24);
}
uint64_t get_u64(std::istream& is) {
  unsigned char b[8];
  is.read(reinterpret_cast<char*>(b), 8);
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}
double get_f64(std::istream& is) {
  uint64_t v = get_u64(is);
  double d;
  std::memcpy(&d, &v, 8);
  return d;
}

void put_mat(std::ostream& os, const Mat& m) {
  put_u32(os, static_cast<uint32_t>(m.rows));
  put_u32(os, static_cast<uint32_t>(m.cols));
  for (double x : m.a) put_f64(os, x);
}
Mat get_mat(std::istream& is) {
  const uint32_t r = get_u32(is), c = get_u32(is);
  require(is && r >= 1 && c >= 1 && r < (1u << 20) && c < (1u << 20), "invalid_input",
          "model file: malformed matrix header");
  Mat m(static_cast<int>(r), static_cast<int>(c));
  for (auto& x : m.a) x = get_f64(is);
  return m;
}

void put_block(std::ostream& os, const GatBlockParams& b) {
  put_u64(os, b.seed);
  put_u32(os, static_cast<uint32_t>(b.layer_weights.size()));
  put_mat(os, b.attn_proj);
  for (const auto& w : b.layer_weights) put_mat(os, w);
}
GatBlockParams get_block(std::istream& is) {
  GatBlockParams b;
  b.seed = get_u64(is);
  const uint32_t layers = get_u32(is);
  require(is && layers >= 1 && layers <= 16, "invalid_input",
          "model file: malformed block header");
  b.attn_proj = get_mat(is);
  for (uint32_t l = 0; l < layers; ++l) b.layer_weights.push_back(get_mat(is));
  return b;
}

}  // namespace

void save_model(const ModelFile& m, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(static_cast<bool>(os), "io", "cannot open for write: " + path);
  os.write("GVGM", 4);
  put_u32(os, 1);  // version
  put_u64(os, m.config_hash);
  put_u32(os, m.mode == LabelMode::Single ? 0u : 1u);
  put_u32(os, static_cast<uint32_t>(m.head.feature_dim));
  put_u32(os, static_cast<uint32_t>(m.head.classes));
  put_block(os, m.head.omega1);
  put_block(os, m.head.omega2);
  put_block(os, m.head.omega3);
  put_mat(os, m.head.classifier);
  put_mat(os, m.head.classifier_bias);
  put_u32(os, static_cast<uint32_t>(m.schedule.gates));
  for (int q : m.schedule.q) put_u32(os, static_cast<uint32_t>(q));
  put_f64(os, m.schedule.beta);
  put_f64(os, m.schedule.threshold);
  put_u32(os, static_cast<uint32_t>(m.gates.size()));
  for (const auto& g : m.gates) {
    put_u32(os, static_cast<uint32_t>(g.seq_len));
    put_mat(os, g.conv_k0);
    put_mat(os, g.conv_k1);
    put_mat(os, g.conv_k2);
    put_mat(os, g.conv_bias);
    put_block(os, g.gat);
    put_mat(os, g.dense_w);
    put_mat(os, g.dense_b);
  }
  require(static_cast<bool>(os), "io", "write failed: " + path);
}

ModelFile load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  require(static_cast<bool>(is), "io", "cannot open: " + path);
  char magic[4];
  is.read(magic, 4);
  require(is && std::memcmp(magic, "GVGM", 4) == 0, "invalid_input",
          path + ": bad magic (not a GVGM model file)");
  require(get_u32(is) == 1, "invalid_input", path + ": unsupported model version");
  ModelFile m;
  m.config_hash = get_u64(is);
  m.mode = get_u32(is) == 0 ? LabelMode::Single : LabelMode::Multi;
  m.head.feature_dim = static_cast<int>(get_u32(is));
  m.head.classes = static_cast<int>(get_u32(is));
  m.head.omega1 = get_block(is);
  m.head.omega2 = get_block(is);
  m.head.omega3 = get_block(is);
  m.head.classifier = get_mat(is);
  m.head.classifier_bias = get_mat(is);
  const uint32_t S = get_u32(is);
  require(is && S >= 1 && S <= 64, "invalid_input", path + ": malformed gate count");
  m.schedule.gates = static_cast<int>(S);
  m.schedule.q.clear();
  for (uint32_t s = 0; s < S; ++s) m.schedule.q.push_back(static_cast<int>(get_u32(is)));
  m.schedule.beta = get_f64(is);
  m.schedule.threshold = get_f64(is);
  const uint32_t ngates = get_u32(is);
  require(is && ngates <= S, "invalid_input", path + ": malformed gate list");
  for (uint32_t i = 0; i < ngates; ++i) {
    GateParams g;
    g.seq_len = static_cast<int>(get_u32(is));
    g.conv_k0 = get_mat(is);
    g.conv_k1 = get_mat(is);
    g.conv_k2 = get_mat(is);
    g.conv_bias = get_mat(is);
    g.gat = get_block(is);
    g.dense_w = get_mat(is);
    g.dense_b = get_mat(is);
    m.gates.push_back(std::move(g));
  }
  require(static_cast<bool>(is), "invalid_input", path + ": truncated model file");
  return m;
}

}  // namespace gvgat
