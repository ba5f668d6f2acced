#pragma once

#include <functional>
#include <vector>

#include "gvgat/common.hpp"

namespace gvgat {

using Vec = std::vector<double>;

// Row-major dense matrix of doubles.
struct Mat {
  int rows = 0, cols = 0;
  std::vector<double> a;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), a(static_cast<size_t>(r) * c, 0.0) {}
  Mat(int r, int c, std::vector<double> data) : rows(r), cols(c), a(std::move(data)) {
    require(static_cast<size_t>(r) * c == a.size(), "shape", "Mat: data size mismatch");
  }

  double& operator()(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double operator()(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }

  static Mat zeros(int r, int c) { return Mat(r, c); }
  static Mat row(const Vec& v) { return Mat(1, static_cast<int>(v.size()), v); }
  static Mat uniform(int r, int c, double lo, double hi, Rng& rng) {
    Mat m(r, c);
    for (auto& x : m.a) x = rng.uniform(lo, hi);
    return m;
  }
  Vec as_vec() const { return a; }
  bool same_shape(const Mat& o) const { return rows == o.rows && cols == o.cols; }
};

// ---- plain (non-differentiable) kernels -----------------------------------

Mat matmul(const Mat& a, const Mat& b);
Mat row_softmax(const Mat& m);
Vec minmax_norm(const Vec& v);
double dissimilarity(const Vec& a, const Vec& b);
double cross_entropy(const Vec& scores, int label);
double bce(double prediction, int target);
Vec softmax(const Vec& v);
double l2_norm(const Vec& v);
double dot(const Vec& a, const Vec& b);

uint64_t mat_checksum(const Mat& m, uint64_t h = 1469598103934665603ull);

// ---- reverse-mode tape ------------------------------------------------------

// Eager forward evaluation; each op records a backward closure. A Tape is
// confined to one logical thread. Node ids index into the tape.
class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  int input(Mat m);

  int matmul(int a, int b);
  int matmul_nt(int a, int b);  // a * b^T
  int add(int a, int b);
  int add_rowvec(int a, int bias);  // broadcast 1xC bias over rows
  int scale(int a, double c);
  int hadamard(int a, int b);
  int relu(int a);
  int sigmoid(int a);
  int row_softmax(int a);
  int col_mean(int a);                      // 1 x cols, mean over rows
  int minmax_norm(int a);                   // elementwise over all entries
  int weighted_pool(int nodes, int w);      // MxF, 1xM -> 1xF
  int concat_cols(int a, int b);            // 1xA, 1xB -> 1x(A+B)
  int stack_rows(const std::vector<int>& rows);  // each 1xF -> NxF
  int shift_rows(int a, int k);             // out[t] = a[t+k] or 0
  int softmax_cross_entropy(int logits, int label);          // 1x1
  int bce_mean_sigmoid(int logits, const Vec& targets);      // 1x1, mean over classes
  int bce(int p, int target);               // p: 1x1 probability in (0,1)

  // Reverse pass from a 1x1 output node. Gradients accumulate into grad(id).
  void backward(int output);

  const Mat& val(int id) const { return nodes_[id].val; }
  const Mat& grad(int id) const { return nodes_[id].grad; }
  size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Mat val;
    Mat grad;
    std::function<void()> back;  // may be empty (leaf)
  };
  std::vector<Node> nodes_;

  int push(Mat v, std::function<void()> back);
  Mat& g(int id) { return nodes_[id].grad; }
  const Mat& v(int id) const { return nodes_[id].val; }
};

}  // namespace gvgat
