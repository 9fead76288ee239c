#include "okd/nn/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "okd/errors.hpp"

namespace okd::nn {

Adam::Adam(std::vector<ParamRef> params, std::vector<double> group_lrs, AdamConfig cfg)
    : params_(std::move(params)), lrs_(std::move(group_lrs)), cfg_(cfg) {
  for (const auto& p : params_) {
    if (p.group < 0 || static_cast<size_t>(p.group) >= lrs_.size()) {
      throw ConfigError("parameter '" + p.name + "' has no learning rate for group " +
                        std::to_string(p.group));
    }
    if (p.grad->dims() != p.value->dims()) {
      throw ShapeError("gradient shape mismatch for '" + p.name + "'");
    }
    m_.push_back(Tensor::zeros_like(*p.value));
    v_.push_back(Tensor::zeros_like(*p.value));
  }
}

void Adam::step() {
  for (const auto& p : params_) {
    if (!p.grad->all_finite()) throw NonFiniteError("non-finite gradient in '" + p.name + "'");
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (size_t k = 0; k < params_.size(); ++k) {
    const auto& p = params_[k];
    const double lr = lrs_[static_cast<size_t>(p.group)];
    Tensor& m = m_[k];
    Tensor& v = v_[k];
    for (size_t j = 0; j < p.value->size(); ++j) {
      const double g = (*p.grad)[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * g;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * g * g;
      const double mhat = m[j] / bc1;
      const double vhat = v[j] / bc2;
      (*p.value)[j] -= lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

void zero_grads(const std::vector<ParamRef>& params) {
  for (const auto& p : params) p.grad->fill(0.0);
}

GradCheckReport finite_diff_check(const std::function<double()>& loss_fn,
                                  const std::vector<ParamRef>& params,
                                  const GradCheckOptions& opts) {
  GradCheckReport rep;
  std::mt19937_64 rng(opts.seed);
  const std::uint64_t base_region = opts.region ? opts.region() : 0;
  for (const auto& p : params) {
    std::vector<size_t> idx(p.value->size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    if (opts.max_entries_per_tensor > 0 && idx.size() > opts.max_entries_per_tensor) {
      std::shuffle(idx.begin(), idx.end(), rng);
      idx.resize(opts.max_entries_per_tensor);
      std::sort(idx.begin(), idx.end());
    }
    for (size_t j : idx) {
      double& x = (*p.value)[j];
      const double saved = x;
      double h = opts.h;
      double up = 0.0, down = 0.0;
      for (int shrink = 0;; ++shrink) {
        x = saved + h;
        up = loss_fn();
        const bool up_same = !opts.region || opts.region() == base_region;
        x = saved - h;
        down = loss_fn();
        const bool down_same = !opts.region || opts.region() == base_region;
        x = saved;
        if ((up_same && down_same) || shrink == opts.max_shrinks) break;
        h /= 10.0;
      }
      if (h != opts.h) ++rep.entries_shrunk;
      const double numeric = (up - down) / (2.0 * h);
      const double analytic = (*p.grad)[j];
      const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
      const double rel = std::abs(analytic - numeric) / denom;
      if (++rep.entries_checked == 1 || rel > rep.max_relative_error) {
        rep.max_relative_error = rel;
        rep.worst_param = p.name;
        rep.worst_index = j;
        rep.analytic = analytic;
        rep.numeric = numeric;
      }
    }
  }
  return rep;
}

}  // namespace okd::nn
