#pragma once

#include <string>
#include <vector>

#include "gvgat/numkernel.hpp"

namespace gvgat {

// Top-1 accuracy for single-label data; argmax ties go to the lowest class.
double top1(const std::vector<Vec>& scores,
            const std::vector<std::vector<int>>& labels);

// mAP with AP = mean of precision at each positive's rank; score ties are
// broken by lowest video index. Classes without positives are excluded.
double mean_ap(const std::vector<Vec>& scores,
               const std::vector<std::vector<int>>& labels,
               std::vector<std::string>* warnings = nullptr);

}  // namespace gvgat
