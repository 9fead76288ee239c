#pragma once

#include <span>

#include "okd/nn/tensor.hpp"

namespace okd::distill {

/// a.b / (|a| |b|), clamped to [-1, 1]. Throws ZeroNormError on a zero vector
/// and ShapeError when the lengths differ.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Mean over anchors i of -log softmax_j(sim(z1_i, z2_j) / tau)[i]. Teacher rows
/// are the anchors and student rows the candidates. Gradients are written to
/// grad_z1 / grad_z2 when non-null.
/// Throws BatchTooSmallError when N < 2 and ZeroNormError on a zero row.
double infonce_loss(const nn::Tensor& z1, const nn::Tensor& z2, double tau,
                    nn::Tensor* grad_z1 = nullptr, nn::Tensor* grad_z2 = nullptr);

/// Mean over rows of |pred - target|_2. The gradient at a zero residual is taken as 0.
double action_loss(const nn::Tensor& pred, const nn::Tensor& target, nn::Tensor* grad = nullptr);

}  // namespace okd::distill
