#include "gvgat/numkernel.hpp"

#include <algorithm>
#include <cmath>

namespace gvgat {

static constexpr double kBceClamp = 1e-7;

// ---- plain kernels ----------------------------------------------------------

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols == b.rows, "shape", "matmul: inner dimensions differ");
  Mat out(a.rows, b.cols);
  for (int i = 0; i < a.rows; ++i) {
    const double* ar = &a.a[static_cast<size_t>(i) * a.cols];
    double* orow = &out.a[static_cast<size_t>(i) * b.cols];
    for (int k = 0; k < a.cols; ++k) {
      const double aik = ar[k];
      if (aik == 0.0) continue;
      const double* br = &b.a[static_cast<size_t>(k) * b.cols];
      for (int j = 0; j < b.cols; ++j) orow[j] += aik * br[j];
    }
  }
  return out;
}

Mat row_softmax(const Mat& m) {
  Mat out(m.rows, m.cols);
  for (int i = 0; i < m.rows; ++i) {
    double mx = m(i, 0);
    for (int j = 1; j < m.cols; ++j) mx = std::max(mx, m(i, j));
    double sum = 0.0;
    for (int j = 0; j < m.cols; ++j) {
      out(i, j) = std::exp(m(i, j) - mx);
      sum += out(i, j);
    }
    for (int j = 0; j < m.cols; ++j) out(i, j) /= sum;
  }
  return out;
}

Vec minmax_norm(const Vec& v) {
  require(!v.empty(), "invalid_input", "minmax_norm: empty vector");
  double lo = v[0], hi = v[0];
  for (double x : v) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  Vec out(v.size(), 0.0);
  const double r = hi - lo;
  if (r == 0.0) return out;  // constant input maps to all zeros
  for (size_t i = 0; i < v.size(); ++i) out[i] = (v[i] - lo) / r;
  return out;
}

double l2_norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double dot(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "shape", "dot: length mismatch");
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double dissimilarity(const Vec& a, const Vec& b) {
  require(a.size() == b.size(), "shape", "dissimilarity: length mismatch");
  const double na = l2_norm(a), nb = l2_norm(b);
  require(na > 0.0 && nb > 0.0, "invalid_input", "dissimilarity: zero-norm input");
  return 0.5 * (1.0 - dot(a, b) / (na * nb));
}

Vec softmax(const Vec& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  Vec out(v.size());
  double sum = 0.0;
  for (size_t i = 0; i < v.size(); ++i) {
    out[i] = std::exp(v[i] - mx);
    sum += out[i];
  }
  for (auto& x : out) x /= sum;
  return out;
}

double cross_entropy(const Vec& scores, int label) {
  require(label >= 0 && label < static_cast<int>(scores.size()), "index",
          "cross_entropy: label out of range");
  double mx = scores[0];
  for (double x : scores) mx = std::max(mx, x);
  double lse = 0.0;
  for (double x : scores) lse += std::exp(x - mx);
  lse = mx + std::log(lse);
  return lse - scores[label];
}

double bce(double prediction, int target) {
  const double p = std::clamp(prediction, kBceClamp, 1.0 - kBceClamp);
  return target == 1 ? -std::log(p) : -std::log(1.0 - p);
}

uint64_t mat_checksum(const Mat& m, uint64_t h) {
  h = fnv1a(&m.rows, sizeof(m.rows), h);
  h = fnv1a(&m.cols, sizeof(m.cols), h);
  return fnv1a(m.a.data(), m.a.size() * sizeof(double), h);
}

// ---- tape -------------------------------------------------------------------

int Tape::push(Mat v, std::function<void()> back) {
  Node n;
  n.grad = Mat::zeros(v.rows, v.cols);
  n.val = std::move(v);
  n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return static_cast<int>(nodes_.size()) - 1;
}

int Tape::input(Mat m) { return push(std::move(m), {}); }

int Tape::matmul(int a, int b) {
  Mat out = gvgat::matmul(v(a), v(b));
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, b] {
    const Mat& go = g(id);
    const Mat& A = v(a);
    const Mat& B = v(b);
    Mat& ga = g(a);
    Mat& gb = g(b);
    // dA = go * B^T ; dB = A^T * go
    for (int i = 0; i < A.rows; ++i)
      for (int k = 0; k < A.cols; ++k) {
        double s = 0.0;
        for (int j = 0; j < B.cols; ++j) s += go(i, j) * B(k, j);
        ga(i, k) += s;
      }
    for (int k = 0; k < B.rows; ++k)
      for (int j = 0; j < B.cols; ++j) {
        double s = 0.0;
        for (int i = 0; i < A.rows; ++i) s += A(i, k) * go(i, j);
        gb(k, j) += s;
      }
  };
  return id;
}

int Tape::matmul_nt(int a, int b) {
  const Mat& A0 = v(a);
  const Mat& B0 = v(b);
  require(A0.cols == B0.cols, "shape", "matmul_nt: inner dimensions differ");
  Mat out(A0.rows, B0.rows);
  for (int i = 0; i < A0.rows; ++i)
    for (int j = 0; j < B0.rows; ++j) {
      double s = 0.0;
      for (int k = 0; k < A0.cols; ++k) s += A0(i, k) * B0(j, k);
      out(i, j) = s;
    }
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, b] {
    const Mat& go = g(id);
    const Mat& A = v(a);
    const Mat& B = v(b);
    Mat& ga = g(a);
    Mat& gb = g(b);
    // out = A B^T : dA = go * B ; dB = go^T * A
    for (int i = 0; i < A.rows; ++i)
      for (int k = 0; k < A.cols; ++k) {
        double s = 0.0;
        for (int j = 0; j < B.rows; ++j) s += go(i, j) * B(j, k);
        ga(i, k) += s;
      }
    for (int j = 0; j < B.rows; ++j)
      for (int k = 0; k < B.cols; ++k) {
        double s = 0.0;
        for (int i = 0; i < A.rows; ++i) s += go(i, j) * A(i, k);
        gb(j, k) += s;
      }
  };
  return id;
}

int Tape::add(int a, int b) {
  require(v(a).same_shape(v(b)), "shape", "add: shape mismatch");
  Mat out = v(a);
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] += v(b).a[i];
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, b] {
    const Mat& go = g(id);
    for (size_t i = 0; i < go.a.size(); ++i) {
      g(a).a[i] += go.a[i];
      g(b).a[i] += go.a[i];
    }
  };
  return id;
}

int Tape::add_rowvec(int a, int bias) {
  const Mat& A = v(a);
  const Mat& B = v(bias);
  require(B.rows == 1 && B.cols == A.cols, "shape", "add_rowvec: bias shape mismatch");
  Mat out = A;
  for (int i = 0; i < A.rows; ++i)
    for (int j = 0; j < A.cols; ++j) out(i, j) += B(0, j);
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, bias] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    Mat& gb = g(bias);
    for (int i = 0; i < go.rows; ++i)
      for (int j = 0; j < go.cols; ++j) {
        ga(i, j) += go(i, j);
        gb(0, j) += go(i, j);
      }
  };
  return id;
}

int Tape::scale(int a, double c) {
  Mat out = v(a);
  for (auto& x : out.a) x *= c;
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, c] {
    const Mat& go = g(id);
    for (size_t i = 0; i < go.a.size(); ++i) g(a).a[i] += c * go.a[i];
  };
  return id;
}

int Tape::hadamard(int a, int b) {
  require(v(a).same_shape(v(b)), "shape", "hadamard: shape mismatch");
  Mat out = v(a);
  for (size_t i = 0; i < out.a.size(); ++i) out.a[i] *= v(b).a[i];
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, b] {
    const Mat& go = g(id);
    for (size_t i = 0; i < go.a.size(); ++i) {
      g(a).a[i] += go.a[i] * v(b).a[i];
      g(b).a[i] += go.a[i] * v(a).a[i];
    }
  };
  return id;
}

int Tape::relu(int a) {
  Mat out = v(a);
  for (auto& x : out.a) x = std::max(x, 0.0);
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a] {
    const Mat& go = g(id);
    for (size_t i = 0; i < go.a.size(); ++i)
      if (v(a).a[i] > 0.0) g(a).a[i] += go.a[i];
  };
  return id;
}

int Tape::sigmoid(int a) {
  Mat out = v(a);
  for (auto& x : out.a) x = 1.0 / (1.0 + std::exp(-x));
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a] {
    const Mat& go = g(id);
    const Mat& y = v(id);
    for (size_t i = 0; i < go.a.size(); ++i)
      g(a).a[i] += go.a[i] * y.a[i] * (1.0 - y.a[i]);
  };
  return id;
}

int Tape::row_softmax(int a) {
  Mat out = gvgat::row_softmax(v(a));
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a] {
    const Mat& go = g(id);
    const Mat& y = v(id);
    Mat& ga = g(a);
    for (int i = 0; i < y.rows; ++i) {
      double s = 0.0;
      for (int j = 0; j < y.cols; ++j) s += go(i, j) * y(i, j);
      for (int j = 0; j < y.cols; ++j) ga(i, j) += y(i, j) * (go(i, j) - s);
    }
  };
  return id;
}

int Tape::col_mean(int a) {
  const Mat& A = v(a);
  Mat out(1, A.cols);
  for (int j = 0; j < A.cols; ++j) {
    double s = 0.0;
    for (int i = 0; i < A.rows; ++i) s += A(i, j);
    out(0, j) = s / A.rows;
  }
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    const double inv = 1.0 / v(a).rows;
    for (int i = 0; i < ga.rows; ++i)
      for (int j = 0; j < ga.cols; ++j) ga(i, j) += go(0, j) * inv;
  };
  return id;
}

int Tape::minmax_norm(int a) {
  const Mat& A = v(a);
  require(!A.a.empty(), "invalid_input", "minmax_norm: empty input");
  size_t imin = 0, imax = 0;
  for (size_t i = 1; i < A.a.size(); ++i) {
    if (A.a[i] < A.a[imin]) imin = i;
    if (A.a[i] > A.a[imax]) imax = i;
  }
  const double lo = A.a[imin], hi = A.a[imax];
  const double r = hi - lo;
  Mat out(A.rows, A.cols);
  if (r > 0.0)
    for (size_t i = 0; i < A.a.size(); ++i) out.a[i] = (A.a[i] - lo) / r;
  int id = push(std::move(out), {});
  if (r > 0.0) {
    nodes_[id].back = [this, id, a, imin, imax, r] {
      const Mat& go = g(id);
      const Mat& y = v(id);
      Mat& ga = g(a);
      // y_i = (x_i - x_min) / r with argmin/argmax treated as fixed
      for (size_t i = 0; i < go.a.size(); ++i) {
        const double gi = go.a[i];
        if (gi == 0.0) continue;
        ga.a[i] += gi / r;
        ga.a[imin] += gi * (-1.0 / r + y.a[i] / r);
        ga.a[imax] += gi * (-y.a[i] / r);
      }
    };
  }
  return id;
}

int Tape::weighted_pool(int nodes, int w) {
  const Mat& X = v(nodes);
  const Mat& W = v(w);
  require(W.rows == 1 && W.cols == X.rows, "shape", "weighted_pool: weight shape mismatch");
  double s = 0.0;
  for (double x : W.a) s += x;
  const bool fallback = s < 1e-12;
  Mat out(1, X.cols);
  if (fallback) {
    for (int j = 0; j < X.cols; ++j) {
      double acc = 0.0;
      for (int i = 0; i < X.rows; ++i) acc += X(i, j);
      out(0, j) = acc / X.rows;
    }
  } else {
    for (int j = 0; j < X.cols; ++j) {
      double acc = 0.0;
      for (int i = 0; i < X.rows; ++i) acc += W.a[i] * X(i, j);
      out(0, j) = acc / s;
    }
  }
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, nodes, w, s, fallback] {
    const Mat& go = g(id);
    const Mat& X = v(nodes);
    const Mat& W = v(w);
    const Mat& y = v(id);
    Mat& gx = g(nodes);
    Mat& gw = g(w);
    if (fallback) {
      const double inv = 1.0 / X.rows;
      for (int i = 0; i < X.rows; ++i)
        for (int j = 0; j < X.cols; ++j) gx(i, j) += go(0, j) * inv;
      return;
    }
    for (int i = 0; i < X.rows; ++i) {
      double gwi = 0.0;
      for (int j = 0; j < X.cols; ++j) {
        gx(i, j) += go(0, j) * W.a[i] / s;
        gwi += go(0, j) * (X(i, j) - y(0, j)) / s;
      }
      gw(0, i) += gwi;
    }
  };
  return id;
}

int Tape::concat_cols(int a, int b) {
  const Mat& A = v(a);
  const Mat& B = v(b);
  require(A.rows == 1 && B.rows == 1, "shape", "concat_cols: expects row vectors");
  Mat out(1, A.cols + B.cols);
  for (int j = 0; j < A.cols; ++j) out(0, j) = A(0, j);
  for (int j = 0; j < B.cols; ++j) out(0, A.cols + j) = B(0, j);
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, b] {
    const Mat& go = g(id);
    const int ac = v(a).cols;
    for (int j = 0; j < ac; ++j) g(a)(0, j) += go(0, j);
    for (int j = 0; j < v(b).cols; ++j) g(b)(0, j) += go(0, ac + j);
  };
  return id;
}

int Tape::stack_rows(const std::vector<int>& rows) {
  require(!rows.empty(), "invalid_input", "stack_rows: empty list");
  const int F = v(rows[0]).cols;
  Mat out(static_cast<int>(rows.size()), F);
  for (size_t i = 0; i < rows.size(); ++i) {
    const Mat& r = v(rows[i]);
    require(r.rows == 1 && r.cols == F, "shape", "stack_rows: row shape mismatch");
    for (int j = 0; j < F; ++j) out(static_cast<int>(i), j) = r(0, j);
  }
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, rows] {
    const Mat& go = g(id);
    for (size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < go.cols; ++j)
        g(rows[i])(0, j) += go(static_cast<int>(i), j);
  };
  return id;
}

int Tape::shift_rows(int a, int k) {
  const Mat& A = v(a);
  Mat out(A.rows, A.cols);
  for (int t = 0; t < A.rows; ++t) {
    const int src = t + k;
    if (src < 0 || src >= A.rows) continue;
    for (int j = 0; j < A.cols; ++j) out(t, j) = A(src, j);
  }
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, a, k] {
    const Mat& go = g(id);
    Mat& ga = g(a);
    for (int t = 0; t < go.rows; ++t) {
      const int src = t + k;
      if (src < 0 || src >= go.rows) continue;
      for (int j = 0; j < go.cols; ++j) ga(src, j) += go(t, j);
    }
  };
  return id;
}

int Tape::softmax_cross_entropy(int logits, int label) {
  const Mat& L = v(logits);
  require(L.rows == 1, "shape", "softmax_cross_entropy: expects a row vector");
  require(label >= 0 && label < L.cols, "index", "softmax_cross_entropy: label out of range");
  Mat out(1, 1);
  out(0, 0) = gvgat::cross_entropy(L.a, label);
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, logits, label] {
    const double go = g(id)(0, 0);
    Vec p = gvgat::softmax(v(logits).a);
    Mat& gl = g(logits);
    for (int j = 0; j < gl.cols; ++j)
      gl(0, j) += go * (p[j] - (j == label ? 1.0 : 0.0));
  };
  return id;
}

int Tape::bce_mean_sigmoid(int logits, const Vec& targets) {
  const Mat& L = v(logits);
  require(L.rows == 1 && static_cast<size_t>(L.cols) == targets.size(), "shape",
          "bce_mean_sigmoid: target length mismatch");
  double loss = 0.0;
  for (int j = 0; j < L.cols; ++j) {
    const double x = L(0, j);
    // softplus(x) - t*x, numerically stable
    loss += std::max(x, 0.0) + std::log1p(std::exp(-std::fabs(x))) - targets[j] * x;
  }
  Mat out(1, 1);
  out(0, 0) = loss / L.cols;
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, logits, targets] {
    const double go = g(id)(0, 0);
    const Mat& L = v(logits);
    Mat& gl = g(logits);
    for (int j = 0; j < L.cols; ++j) {
      const double p = 1.0 / (1.0 + std::exp(-L(0, j)));
      gl(0, j) += go * (p - targets[j]) / L.cols;
    }
  };
  return id;
}

int Tape::bce(int p, int target) {
  const Mat& P = v(p);
  require(P.rows == 1 && P.cols == 1, "shape", "bce: expects a scalar node");
  Mat out(1, 1);
  out(0, 0) = gvgat::bce(P(0, 0), target);
  int id = push(std::move(out), {});
  nodes_[id].back = [this, id, p, target] {
    const double go = g(id)(0, 0);
    const double pv = std::clamp(v(p)(0, 0), kBceClamp, 1.0 - kBceClamp);
    // clamped region carries no gradient
    if (v(p)(0, 0) <= kBceClamp || v(p)(0, 0) >= 1.0 - kBceClamp) return;
    g(p)(0, 0) += go * (target == 1 ? -1.0 / pv : 1.0 / (1.0 - pv));
  };
  return id;
}

void Tape::backward(int output) {
  require(output >= 0 && output < static_cast<int>(nodes_.size()), "index",
          "backward: bad node id");
  require(v(output).rows == 1 && v(output).cols == 1, "contract",
          "backward: output must be scalar");
  for (auto& n : nodes_) std::fill(n.grad.a.begin(), n.grad.a.end(), 0.0);
  nodes_[output].grad(0, 0) = 1.0;
  for (int i = output; i >= 0; --i)
    if (nodes_[i].back) nodes_[i].back();
}

}  // namespace gvgat
