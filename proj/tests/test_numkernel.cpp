#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "doctest.h"
#include "gvgat/numkernel.hpp"
#include "oracles.hpp"

using namespace gvgat;

TEST_CASE("matmul basics") {
  Mat I(2, 2, {1, 0, 0, 1});
  Mat M(2, 2, {3, -1, 2, 5});
  Mat r = matmul(I, M);
  for (size_t i = 0; i < M.a.size(); ++i) CHECK(r.a[i] == M.a[i]);

  Mat a(2, 2, {1, 2, 3, 4});
  Mat b(2, 1, {0, 1});
  Mat c = matmul(a, b);
  CHECK(c(0, 0) == doctest::Approx(2));
  CHECK(c(1, 0) == doctest::Approx(4));

  Mat z = matmul(Mat::zeros(2, 2), M);
  for (double x : z.a) CHECK(x == 0.0);

  CHECK_THROWS_AS(matmul(Mat(2, 3), Mat(2, 3)), Error);
}

TEST_CASE("row_softmax: symmetry, stability, hand value") {
  Mat m1 = row_softmax(Mat(1, 2, {0, 0}));
  CHECK(m1(0, 0) == doctest::Approx(0.5));
  Mat m2 = row_softmax(Mat(1, 3, {1000, 1000, 1000}));
  for (double x : m2.a) CHECK(x == doctest::Approx(1.0 / 3));
  Mat m3 = row_softmax(Mat(1, 2, {0, std::log(3.0)}));
  CHECK(m3(0, 0) == doctest::Approx(0.25));
  CHECK(m3(0, 1) == doctest::Approx(0.75));

  Rng rng(9);
  Mat big = Mat::uniform(5, 7, -1e6, 1e6, rng);
  Mat sm = row_softmax(big);
  for (int i = 0; i < 5; ++i) {
    double s = 0;
    for (int j = 0; j < 7; ++j) s += sm(i, j);
    CHECK(s == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("minmax_norm: values, degenerate, affine invariance") {
  Vec r = minmax_norm({1, 3, 5});
  CHECK(r[0] == 0.0);
  CHECK(r[1] == doctest::Approx(0.5));
  CHECK(r[2] == 1.0);
  for (double x : minmax_norm({4.2, 4.2, 4.2})) CHECK(x == 0.0);
  CHECK(minmax_norm({7.0}) == Vec{0.0});

  Rng rng(3);
  for (int t = 0; t < 20; ++t) {
    Vec v(6);
    for (auto& x : v) x = rng.uniform(-5, 5);
    const double a = rng.uniform(0.1, 4.0), b = rng.uniform(-3, 3);
    Vec w(v.size());
    for (size_t i = 0; i < v.size(); ++i) w[i] = a * v[i] + b;
    Vec nv = minmax_norm(v), nw = minmax_norm(w);
    for (size_t i = 0; i < v.size(); ++i)
      CHECK(nv[i] == doctest::Approx(nw[i]).epsilon(1e-9));
  }
}

TEST_CASE("dissimilarity: endpoints, symmetry, scale invariance") {
  Vec v{1, 2, -1};
  CHECK(dissimilarity(v, v) == doctest::Approx(0.0));
  Vec nv{-1, -2, 1};
  CHECK(dissimilarity(v, nv) == doctest::Approx(1.0));
  CHECK(dissimilarity({1, 0}, {0, 1}) == doctest::Approx(0.5));
  Vec a{0.3, -0.7, 2}, b{1.5, 0.2, -0.4};
  CHECK(dissimilarity(a, b) == doctest::Approx(dissimilarity(b, a)));
  Vec b3{4.5, 0.6, -1.2};  // 3 * b
  CHECK(dissimilarity(a, b3) == doctest::Approx(dissimilarity(a, b)).epsilon(1e-12));
  CHECK_THROWS_AS(dissimilarity({0, 0}, {1, 0}), Error);
}

TEST_CASE("cross_entropy and bce values") {
  CHECK(cross_entropy({1, 1, 1, 1}, 2) == doctest::Approx(std::log(4.0)));
  CHECK(cross_entropy({10, -10}, 0) == doctest::Approx(2.061e-9).epsilon(1e-3));
  CHECK(cross_entropy({0, 0}, 1) == doctest::Approx(std::log(2.0)));
  CHECK(cross_entropy({3, -2, 7}, 1) >= 0.0);
  CHECK_THROWS_AS(cross_entropy({1, 2}, 5), Error);

  CHECK(bce(0.5, 1) == doctest::Approx(std::log(2.0)));
  CHECK(bce(1.0 - 1e-9, 1) < 1e-6);  // clamped, no infinity
  CHECK(bce(0.9, 0) == doctest::Approx(-std::log(0.1)));
  CHECK(std::isfinite(bce(0.0, 1)));
  CHECK(std::isfinite(bce(1.0, 0)));
}

TEST_CASE("tape: polynomial and constant gradients") {
  Tape t;
  int x = t.input(Mat(1, 1, {3.0}));
  int y = t.hadamard(x, x);  // x^2
  t.backward(y);
  CHECK(t.grad(x)(0, 0) == doctest::Approx(6.0));

  Tape t2;
  int c = t2.input(Mat(1, 1, {5.0}));
  int one = t2.scale(c, 0.0);  // constant 0 regardless of c
  t2.backward(one);
  CHECK(t2.grad(c)(0, 0) == doctest::Approx(0.0));
}

TEST_CASE("tape: bce(sigmoid(w x)) matches finite differences") {
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    Mat w = Mat::uniform(1, 4, -1, 1, rng);
    Mat x = Mat::uniform(4, 1, -1, 1, rng);
    const int target = trial % 2;
    auto loss = [&]() {
      Tape t;
      int wi = t.input(w), xi = t.input(x);
      int p = t.sigmoid(t.matmul(wi, xi));
      return t.val(t.bce(p, target))(0, 0);
    };
    Tape t;
    int wi = t.input(w), xi = t.input(x);
    int p = t.sigmoid(t.matmul(wi, xi));
    t.backward(t.bce(p, target));
    auto r = oracle::grad_check({&w, &x}, loss, {t.grad(wi), t.grad(xi)});
    CHECK_MESSAGE(r.max_rel_err < 1e-4, r.worst);
  }
}

// Every tape op composed into one scalar, checked against central differences.
TEST_CASE("tape: composite graph over all ops matches finite differences") {
  Rng rng(99);
  for (int trial = 0; trial < 8; ++trial) {
    Mat A = Mat::uniform(3, 3, -1, 1, rng);
    Mat B = Mat::uniform(3, 3, -1, 1, rng);
    Mat bias = Mat::uniform(1, 3, -0.5, 0.5, rng);
    Mat W = Mat::uniform(1, 3, 0.1, 1.0, rng);

    auto build = [&](Tape& t, int& ai, int& bi, int& bii, int& wi) {
      ai = t.input(A);
      bi = t.input(B);
      bii = t.input(bias);
      wi = t.input(W);
      int m = t.matmul(ai, bi);
      int mn = t.matmul_nt(m, bi);
      int s = t.add(m, t.scale(mn, 0.3));
      int r = t.relu(t.add_rowvec(s, bii));
      int sm = t.row_softmax(t.shift_rows(r, 1));
      int h = t.hadamard(sm, t.sigmoid(s));
      int cm = t.col_mean(h);           // 1x3
      int mm = t.minmax_norm(t.col_mean(s));
      int rows = t.stack_rows({cm, mm, t.col_mean(r)});  // 3x3
      int pooled = t.weighted_pool(rows, t.add(t.minmax_norm(cm), t.scale(cm, 0.0)));
      int cat = t.concat_cols(pooled, cm);  // 1x6
      // collapse to scalars through both loss heads
      int lp = t.softmax_cross_entropy(cat, 2);
      int lb = t.bce_mean_sigmoid(cat, {1, 0, 1, 0, 1, 1});
      return t.add(lp, lb);
    };

    auto loss = [&]() {
      Tape t;
      int ai, bi, bii, wi;
      return t.val(build(t, ai, bi, bii, wi))(0, 0);
    };
    Tape t;
    int ai, bi, bii, wi;
    t.backward(build(t, ai, bi, bii, wi));
    auto r = oracle::grad_check({&A, &B, &bias}, loss,
                                {t.grad(ai), t.grad(bi), t.grad(bii)});
    CHECK_MESSAGE(r.max_rel_err < 1e-4, r.worst);
  }
}

TEST_CASE("tape: weighted_pool degenerate weights fall back to plain mean") {
  Tape t;
  Mat X(2, 3, {1, 2, 3, 5, 6, 7});
  int xi = t.input(X);
  int w = t.input(Mat(1, 2, {0.0, 0.0}));
  int p = t.weighted_pool(xi, w);
  CHECK(t.val(p)(0, 0) == doctest::Approx(3.0));
  CHECK(t.val(p)(0, 2) == doctest::Approx(5.0));
}

TEST_CASE("deterministic reductions: identical inputs give identical bits") {
  Rng r1(123), r2(123);
  Mat a1 = Mat::uniform(6, 6, -2, 2, r1), b1 = Mat::uniform(6, 6, -2, 2, r1);
  Mat a2 = Mat::uniform(6, 6, -2, 2, r2), b2 = Mat::uniform(6, 6, -2, 2, r2);
  CHECK(mat_checksum(matmul(a1, b1)) == mat_checksum(matmul(a2, b2)));
  CHECK(mat_checksum(row_softmax(a1)) == mat_checksum(row_softmax(a2)));
}
