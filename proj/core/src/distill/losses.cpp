#include "okd/distill/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "okd/errors.hpp"

namespace okd::distill {

using nn::Tensor;

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw ShapeError("cosine similarity of vectors with " + std::to_string(a.size()) + " and " +
                     std::to_string(b.size()) + " entries");
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroNormError("cosine similarity of a zero vector");
  return std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
}

namespace {

// Row-normalised copy plus the original row norms.
Tensor normalise_rows(const Tensor& z, std::vector<double>& norms, const char* what) {
  const size_t n = z.dim(0), e = z.dim(1);
  Tensor u(z.dims());
  norms.assign(n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (size_t k = 0; k < e; ++k) s += z[i * e + k] * z[i * e + k];
    if (s == 0.0) throw ZeroNormError(std::string(what) + " row " + std::to_string(i) + " is zero");
    norms[i] = std::sqrt(s);
    for (size_t k = 0; k < e; ++k) u[i * e + k] = z[i * e + k] / norms[i];
  }
  return u;
}

// Gradient through u = z / |z| for every row.
Tensor unnormalise_grad(const Tensor& u, const std::vector<double>& norms, const Tensor& gu) {
  const size_t n = u.dim(0), e = u.dim(1);
  Tensor gz(u.dims());
  for (size_t i = 0; i < n; ++i) {
    double dot = 0.0;
    for (size_t k = 0; k < e; ++k) dot += u[i * e + k] * gu[i * e + k];
    for (size_t k = 0; k < e; ++k) gz[i * e + k] = (gu[i * e + k] - u[i * e + k] * dot) / norms[i];
  }
  return gz;
}

}  // namespace

double infonce_loss(const Tensor& z1, const Tensor& z2, double tau, Tensor* grad_z1,
                    Tensor* grad_z2) {
  if (z1.rank() != 2) throw ShapeError("infonce: expected [N, E], got " + nn::dims_to_string(z1.dims()));
  nn::expect_dims(z2, z1.dims(), "infonce student embeddings");
  const size_t n = z1.dim(0), e = z1.dim(1);
  if (n < 2) throw BatchTooSmallError("infonce needs at least 2 pairs, got " + std::to_string(n));
  if (!(tau > 0.0)) throw RangeError("infonce temperature must be positive");

  std::vector<double> n1, n2;
  const Tensor u = normalise_rows(z1, n1, "teacher embedding");
  const Tensor v = normalise_rows(z2, n2, "student embedding");

  // logits[i][j] = cos(z1_i, z2_j) / tau; softmax kept in place for the gradient.
  std::vector<double> p(n * n);
  double loss = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double row_max = -INFINITY;
    for (size_t j = 0; j < n; ++j) {
      double dot = 0.0;
      for (size_t k = 0; k < e; ++k) dot += u[i * e + k] * v[j * e + k];
      p[i * n + j] = dot / tau;
      row_max = std::max(row_max, p[i * n + j]);
    }
    double sum = 0.0;
    for (size_t j = 0; j < n; ++j) sum += std::exp(p[i * n + j] - row_max);
    const double log_sum = row_max + std::log(sum);
    loss += log_sum - p[i * n + i];
    for (size_t j = 0; j < n; ++j) p[i * n + j] = std::exp(p[i * n + j] - log_sum);
  }
  loss /= static_cast<double>(n);

  if (grad_z1 || grad_z2) {
    // d loss / d logits = (softmax - I) / N; logits = u v^T / tau.
    const double scale = 1.0 / (static_cast<double>(n) * tau);
    Tensor gu(u.dims()), gv(v.dims());
    for (size_t i = 0; i < n; ++i) {
      for (size_t j = 0; j < n; ++j) {
        const double g = (p[i * n + j] - (i == j ? 1.0 : 0.0)) * scale;
        if (g == 0.0) continue;
        for (size_t k = 0; k < e; ++k) {
          gu[i * e + k] += g * v[j * e + k];
          gv[j * e + k] += g * u[i * e + k];
        }
      }
    }
    if (grad_z1) *grad_z1 = unnormalise_grad(u, n1, gu);
    if (grad_z2) *grad_z2 = unnormalise_grad(v, n2, gv);
  }
  return loss;
}

double action_loss(const Tensor& pred, const Tensor& target, Tensor* grad) {
  if (pred.rank() != 2) throw ShapeError("action loss: expected [B, 3], got " + nn::dims_to_string(pred.dims()));
  nn::expect_dims(target, pred.dims(), "action labels");
  const size_t b = pred.dim(0), d = pred.dim(1);
  if (b == 0) throw BatchTooSmallError("action loss on an empty batch");
  if (grad) *grad = Tensor(pred.dims());
  double total = 0.0;
  for (size_t i = 0; i < b; ++i) {
    double s = 0.0;
    for (size_t k = 0; k < d; ++k) {
      const double r = pred[i * d + k] - target[i * d + k];
      s += r * r;
    }
    const double norm = std::sqrt(s);
    total += norm;
    if (grad && norm > 0.0) {
      for (size_t k = 0; k < d; ++k) {
        (*grad)[i * d + k] = (pred[i * d + k] - target[i * d + k]) / (norm * static_cast<double>(b));
      }
    }
  }
  return total / static_cast<double>(b);
}

}  // namespace okd::distill
