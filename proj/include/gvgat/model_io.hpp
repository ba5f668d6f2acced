#pragma once

#include <string>
#include <vector>

#include "gvgat/gathead.hpp"
#include "gvgat/gating.hpp"

namespace gvgat {

struct ModelFile {
  HeadParams head;
  std::vector<GateParams> gates;  // may be empty (head-only model)
  GateSchedule schedule;
  LabelMode mode = LabelMode::Single;
  uint64_t config_hash = 0;
};

// Versioned binary model container ("GVGM"); doubles stored exactly, so a
// save/load round trip is bit-identical.
void save_model(const ModelFile& m, const std::string& path);
ModelFile load_model(const std::string& path);

}  // namespace gvgat
