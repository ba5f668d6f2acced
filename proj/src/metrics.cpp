#include "gvgat/metrics.hpp"

#include <algorithm>
#include <numeric>

namespace gvgat {

double top1(const std::vector<Vec>& scores,
            const std::vector<std::vector<int>>& labels) {
  require(!scores.empty() && scores.size() == labels.size(), "invalid_input",
          "top1: empty or mismatched inputs");
  int correct = 0;
  for (size_t i = 0; i < scores.size(); ++i) {
    require(labels[i].size() == 1, "mode", "top1 requires single-label data");
    int best = 0;
    for (size_t j = 1; j < scores[i].size(); ++j)
      if (scores[i][j] > scores[i][best]) best = static_cast<int>(j);
    if (best == labels[i][0]) ++correct;
  }
  return static_cast<double>(correct) / scores.size();
}

double mean_ap(const std::vector<Vec>& scores,
               const std::vector<std::vector<int>>& labels,
               std::vector<std::string>* warnings) {
  require(!scores.empty() && scores.size() == labels.size(), "invalid_input",
          "mean_ap: empty or mismatched inputs");
  const size_t n = scores.size();
  const size_t classes = scores[0].size();
  double ap_sum = 0.0;
  int evaluated = 0;
  for (size_t g = 0; g < classes; ++g) {
    std::vector<char> positive(n, 0);
    int npos = 0;
    for (size_t i = 0; i < n; ++i)
      for (int l : labels[i])
        if (static_cast<size_t>(l) == g) {
          positive[i] = 1;
          ++npos;
        }
    if (npos == 0) {
      if (warnings)
        warnings->push_back("mean_ap: class " + std::to_string(g) +
                            " has no positives; excluded");
      continue;
    }
    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return scores[a][g] > scores[b][g]; });
    double ap = 0.0;
    int hits = 0;
    for (size_t rank = 0; rank < n; ++rank) {
      if (!positive[order[rank]]) continue;
      ++hits;
      ap += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
    ap_sum += ap / npos;
    ++evaluated;
  }
  require(evaluated > 0, "invalid_input", "mean_ap: no class has positives");
  return ap_sum / evaluated;
}

}  // namespace gvgat
