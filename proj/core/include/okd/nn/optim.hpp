#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "okd/nn/layers.hpp"

namespace okd::nn {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Bias-corrected Adam with one learning rate per parameter group.
class Adam {
 public:
  Adam(std::vector<ParamRef> params, std::vector<double> group_lrs, AdamConfig cfg = {});

  /// Applies one update from the gradients currently held in the ParamRefs.
  /// Throws NonFiniteError, leaving parameters and moments untouched, when
  /// any gradient entry is NaN or infinite.
  void step();

  std::int64_t step_count() const { return t_; }
  double lr(int group) const { return lrs_.at(static_cast<size_t>(group)); }
  void set_lr(int group, double lr) { lrs_.at(static_cast<size_t>(group)) = lr; }

  const std::vector<Tensor>& first_moments() const { return m_; }
  const std::vector<Tensor>& second_moments() const { return v_; }

 private:
  std::vector<ParamRef> params_;
  std::vector<double> lrs_;
  AdamConfig cfg_;
  std::vector<Tensor> m_, v_;
  std::int64_t t_ = 0;
};

void zero_grads(const std::vector<ParamRef>& params);

struct GradCheckOptions {
  double h = 1e-5;
  size_t max_entries_per_tensor = 0;  // 0 = every entry
  std::uint64_t seed = 0;             // picks entries when subsampling
  // Optional signature of the piecewise-smooth region the loss is in (e.g. a
  // hash of relu activation signs). When x + h or x - h lands in a different
  // region than x, the step is divided by 10, up to max_shrinks times, so the
  // stencil does not straddle a kink.
  std::function<std::uint64_t()> region;
  int max_shrinks = 4;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_param;
  size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  size_t entries_checked = 0;
  size_t entries_shrunk = 0;  // entries that needed a smaller step
};

/// Compares each ParamRef's grad (taken as the analytic gradient) against
/// central differences of loss_fn, perturbing the values in place.
/// Relative error per entry is |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport finite_diff_check(const std::function<double()>& loss_fn,
                                  const std::vector<ParamRef>& params,
                                  const GradCheckOptions& opts = {});

}  // namespace okd::nn
