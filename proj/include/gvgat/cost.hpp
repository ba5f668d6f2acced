#pragma once

namespace gvgat {

// Abstract FLOP-unit cost model. Defaults are calibrated so that the paper's
// dataset configurations reproduce the published ViGAT/Gated-ViGAT ratios.
// The local branch (detector + K object features) dominates by construction.
struct CostModel {
  double backbone_frame = 1.0;   // global feature extraction, per frame
  double detector_frame = 10.0;  // object detector, per processed frame
  double backbone_object = 0.8;  // per-object feature extraction
  double head_block = 0.01;      // per GAT-block / classifier application
  double gate = 0.005;           // per gate evaluation (incl. its local pooling)
};

// Gated inference: all P frames on the global branch, frames_used on the
// local branch, one head pass, exit_gate gate evaluations.
inline double account_cost(const CostModel& m, int frames_total, int objects,
                           int frames_used, int exit_gate) {
  return frames_total * m.backbone_frame +
         frames_used * (m.detector_frame + objects * m.backbone_object) +
         (2 + frames_used) * m.head_block + exit_gate * m.gate;
}

// All-frames ViGAT baseline: local branch on every frame, no gates.
inline double baseline_cost(const CostModel& m, int frames_total, int objects) {
  return frames_total * m.backbone_frame +
         frames_total * (m.detector_frame + objects * m.backbone_object) +
         (2 + frames_total) * m.head_block;
}

}  // namespace gvgat
