#include "gvgat/framepolicy.hpp"

#include <algorithm>
#include <numeric>

namespace gvgat {

PolicyVariant policy_variant_from_string(const std::string& s) {
  if (s == "random") return PolicyVariant::Random;
  if (s == "wid") return PolicyVariant::WidTopK;
  if (s == "random_local") return PolicyVariant::RandomLocal;
  if (s == "wid_local") return PolicyVariant::WidLocal;
  if (s == "proposed") return PolicyVariant::Proposed;
  fail("invalid_input", "unknown policy variant: " + s);
}

std::string to_string(PolicyVariant v) {
  switch (v) {
    case PolicyVariant::Random: return "random";
    case PolicyVariant::WidTopK: return "wid";
    case PolicyVariant::RandomLocal: return "random_local";
    case PolicyVariant::WidLocal: return "wid_local";
    case PolicyVariant::Proposed: return "proposed";
  }
  return "?";
}

PolicyState policy_init(const Vec& u, const Mat& gamma, uint64_t rng_seed) {
  require(gamma.rows >= 1, "invalid_input", "policy_init: no frames");
  require(static_cast<int>(u.size()) == gamma.rows, "shape",
          "policy_init: WiD length must equal frame count");
  PolicyState st;
  st.u_work = u;
  st.gamma = gamma;
  st.gamma_norm = gamma;
  for (int p = 0; p < gamma.rows; ++p) {
    double n = 0.0;
    for (int j = 0; j < gamma.cols; ++j) n += gamma(p, j) * gamma(p, j);
    n = std::sqrt(n);
    require(n > 0.0, "invalid_input", "policy_init: zero-norm feature row");
    for (int j = 0; j < gamma.cols; ++j) st.gamma_norm(p, j) /= n;
  }
  st.picked.assign(gamma.rows, 0);
  st.rng_seed = rng_seed;
  return st;
}

int select_next(PolicyState& st) {
  const int P = st.frames();
  require(static_cast<int>(st.selected.size()) < P, "exhausted",
          "select_next: all frames already selected");
  // argmax of the working WiDs over unselected frames, ties to lowest index
  int best = -1;
  for (int p = 0; p < P; ++p) {
    if (st.picked[p]) continue;
    if (best < 0 || st.u_work[p] > st.u_work[best]) best = p;
  }
  st.picked[best] = 1;
  st.selected.push_back(best);

  // dissimilarity of the pick against every frame
  Vec alpha(P);
  for (int p = 0; p < P; ++p) {
    double d = 0.0;
    for (int j = 0; j < st.gamma.cols; ++j)
      d += st.gamma_norm(best, j) * st.gamma_norm(p, j);
    alpha[p] = 0.5 * (1.0 - d);
  }
  Vec u_n = minmax_norm(st.u_work);
  Vec a_n = minmax_norm(alpha);
  for (int p = 0; p < P; ++p) st.u_work[p] = u_n[p] * a_n[p];
  return best;
}

std::vector<int> select_for_gate(PolicyState& st, int q_target) {
  if (q_target > st.frames()) {
    q_target = st.frames();
    st.clamped = true;
  }
  require(q_target >= static_cast<int>(st.selected.size()), "invalid_input",
          "select_for_gate: target below current selection");
  while (static_cast<int>(st.selected.size()) < q_target) select_next(st);
  return st.selected;
}

std::vector<int> baseline_select(PolicyVariant kind, const Vec& u, const Mat& gamma,
                                 int theta, uint64_t seed) {
  const int P = gamma.rows;
  require(theta >= 0 && theta <= P, "invalid_input", "baseline_select: theta exceeds frames");
  switch (kind) {
    case PolicyVariant::Random:
    case PolicyVariant::RandomLocal: {
      std::vector<int> idx(P);
      std::iota(idx.begin(), idx.end(), 0);
      Rng rng(seed);
      for (int i = 0; i < theta; ++i)
        std::swap(idx[i], idx[i + rng.below(P - i)]);
      idx.resize(theta);
      return idx;
    }
    case PolicyVariant::WidTopK:
    case PolicyVariant::WidLocal: {
      require(static_cast<int>(u.size()) == P, "shape", "baseline_select: WiD length mismatch");
      std::vector<int> idx(P);
      std::iota(idx.begin(), idx.end(), 0);
      std::stable_sort(idx.begin(), idx.end(),
                       [&](int a, int b) { return u[a] > u[b]; });
      idx.resize(theta);
      return idx;
    }
    case PolicyVariant::Proposed: {
      PolicyState st = policy_init(u, gamma, seed);
      return select_for_gate(st, theta);
    }
  }
  fail("invalid_input", "baseline_select: bad variant");
}

}  // namespace gvgat
