#pragma once

#include <string>
#include <vector>

#include "gvgat/numkernel.hpp"

namespace gvgat {

enum class PolicyVariant { Random, WidTopK, RandomLocal, WidLocal, Proposed };

PolicyVariant policy_variant_from_string(const std::string& s);
std::string to_string(PolicyVariant v);

// Variants that still compute the global path on all P frames.
inline bool policy_uses_full_global(PolicyVariant v) {
  return v == PolicyVariant::RandomLocal || v == PolicyVariant::WidLocal ||
         v == PolicyVariant::Proposed;
}

// Working state of the salience+diversity selection. Selected frames are
// masked out of the argmax; the working WiD vector is re-normalized and
// multiplied by the normalized dissimilarity to the latest pick each step.
struct PolicyState {
  std::vector<int> selected;
  std::vector<char> picked;   // mask, length P
  Vec u_work;                 // length P
  Mat gamma;                  // P x F
  Mat gamma_norm;             // rows L2-normalized
  uint64_t rng_seed = 0;
  bool clamped = false;       // a q_target exceeded P and was clamped

  int frames() const { return gamma.rows; }
};

PolicyState policy_init(const Vec& u, const Mat& gamma, uint64_t rng_seed = 0);

// One iteration of the proposed policy; returns the picked frame index.
int select_next(PolicyState& state);

// Extends the selection until q_target frames are picked; returns the full
// ordered list. q_target > P is clamped to P and flagged on the state.
std::vector<int> select_for_gate(PolicyState& state, int q_target);

// Ablation baselines (Random / WidTopK; the *Local variants share the same
// index selection and differ only in how the pipeline derives globals).
std::vector<int> baseline_select(PolicyVariant kind, const Vec& u, const Mat& gamma,
                                 int theta, uint64_t seed);

}  // namespace gvgat
