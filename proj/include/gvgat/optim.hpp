#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "gvgat/numkernel.hpp"

namespace gvgat {

// Minibatch optimizer over a fixed list of parameter matrices.
// Gradients are supplied already averaged over the batch.
class Optimizer {
 public:
  Optimizer(std::string kind, std::vector<Mat*> params)
      : kind_(std::move(kind)), params_(std::move(params)) {
    require(kind_ == "sgd" || kind_ == "adam", "invalid_input",
            "optimizer must be 'sgd' or 'adam'");
    for (Mat* p : params_) {
      m_.push_back(Mat::zeros(p->rows, p->cols));
      v_.push_back(Mat::zeros(p->rows, p->cols));
    }
  }

  void step(const std::vector<Mat>& grads, double lr) {
    require(grads.size() == params_.size(), "shape", "optimizer: gradient count mismatch");
    ++t_;
    for (size_t i = 0; i < params_.size(); ++i) {
      Mat& p = *params_[i];
      const Mat& gr = grads[i];
      if (kind_ == "sgd") {
        for (size_t k = 0; k < p.a.size(); ++k) p.a[k] -= lr * gr.a[k];
        continue;
      }
      const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
      const double bc1 = 1.0 - std::pow(b1, t_);
      const double bc2 = 1.0 - std::pow(b2, t_);
      for (size_t k = 0; k < p.a.size(); ++k) {
        m_[i].a[k] = b1 * m_[i].a[k] + (1.0 - b1) * gr.a[k];
        v_[i].a[k] = b2 * v_[i].a[k] + (1.0 - b2) * gr.a[k] * gr.a[k];
        p.a[k] -= lr * (m_[i].a[k] / bc1) / (std::sqrt(v_[i].a[k] / bc2) + eps);
      }
    }
  }

 private:
  std::string kind_;
  std::vector<Mat*> params_;
  std::vector<Mat> m_, v_;
  int t_ = 0;
};

// Learning-rate schedule: lr multiplied by decay_factor at each listed epoch.
inline double scheduled_lr(double base_lr, double decay_factor,
                           const std::vector<int>& decay_epochs, int epoch) {
  double lr = base_lr;
  for (int e : decay_epochs)
    if (epoch >= e) lr *= decay_factor;
  return lr;
}

}  // namespace gvgat
