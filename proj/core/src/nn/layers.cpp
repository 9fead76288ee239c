#include "okd/nn/layers.hpp"

#include <Eigen/Core>
#include <cmath>

#include "okd/errors.hpp"

namespace okd::nn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMat>;
using CMapMat = Eigen::Map<const RowMat>;
using CMapVec = Eigen::Map<const Eigen::RowVectorXd>;
using MapVec = Eigen::Map<Eigen::RowVectorXd>;

MapMat mat(Tensor& t, size_t rows, size_t cols) {
  return MapMat(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}
CMapMat mat(const Tensor& t, size_t rows, size_t cols) {
  return CMapMat(t.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void expect_rank2(const Tensor& x, size_t cols, const char* what) {
  if (x.rank() != 2 || x.dim(1) != cols) {
    throw ShapeError(std::string(what) + ": expected dims [batch, " + std::to_string(cols) +
                     "], got " + dims_to_string(x.dims()));
  }
}

double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

}  // namespace

void init_uniform_fan_in(Tensor& t, size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : t.values()) v = u(rng);
}

// ---------------------------------------------------------------- Dense

Dense::Dense(size_t in, size_t out)
    : weight({out, in}), bias({out}), grad_weight({out, in}), grad_bias({out}), in_(in), out_(out) {}

Tensor Dense::forward(const Tensor& x, Cache* cache) const {
  expect_rank2(x, in_, "dense input");
  const size_t B = x.dim(0);
  Tensor y({B, out_});
  auto Y = mat(y, B, out_);
  Y.noalias() = mat(x, B, in_) * mat(weight, out_, in_).transpose();
  Y.rowwise() += CMapVec(bias.data(), static_cast<Eigen::Index>(out_));
  if (cache) cache->x = x;
  return y;
}

Tensor Dense::backward(const Cache& cache, const Tensor& grad_out) {
  const size_t B = cache.x.dim(0);
  expect_dims(grad_out, {B, out_}, "dense upstream gradient");
  const auto G = mat(grad_out, B, out_);
  mat(grad_weight, out_, in_).noalias() += G.transpose() * mat(cache.x, B, in_);
  MapVec(grad_bias.data(), static_cast<Eigen::Index>(out_)) += G.colwise().sum();
  Tensor gx({B, in_});
  mat(gx, B, in_).noalias() = G * mat(weight, out_, in_);
  return gx;
}

void Dense::init(std::mt19937_64& rng) {
  init_uniform_fan_in(weight, in_, rng);
  init_uniform_fan_in(bias, in_, rng);
}

void Dense::zero_grad() {
  grad_weight.fill(0.0);
  grad_bias.fill(0.0);
}

void Dense::collect(std::vector<ParamRef>& out, const std::string& prefix, int group) {
  out.push_back({prefix + ".weight", &weight, &grad_weight, group});
  out.push_back({prefix + ".bias", &bias, &grad_bias, group});
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(size_t in_channels, size_t out_channels, size_t kernel, size_t stride,
               size_t padding)
    : weight({out_channels, in_channels, kernel}),
      bias({out_channels}),
      grad_weight({out_channels, in_channels, kernel}),
      grad_bias({out_channels}),
      cin_(in_channels),
      cout_(out_channels),
      k_(kernel),
      stride_(stride),
      pad_(padding) {
  if (kernel == 0 || stride == 0) throw ShapeError("conv1d kernel and stride must be positive");
}

size_t Conv1d::out_length(size_t length) const {
  const size_t padded = length + 2 * pad_;
  if (padded < k_) return 0;
  return (padded - k_) / stride_ + 1;
}

Tensor Conv1d::forward(const Tensor& x, Cache* cache) const {
  if (x.rank() != 3 || x.dim(1) != cin_) {
    throw ShapeError("conv1d input: expected dims [batch, " + std::to_string(cin_) +
                     ", length], got " + dims_to_string(x.dims()));
  }
  const size_t B = x.dim(0), L = x.dim(2), Lo = out_length(L);
  if (Lo == 0) throw ShapeError("conv1d input length " + std::to_string(L) + " shorter than kernel");

  const size_t rows = cin_ * k_, ncols = B * Lo;
  Tensor cols({rows, ncols});
  for (size_t ci = 0; ci < cin_; ++ci) {
    for (size_t j = 0; j < k_; ++j) {
      double* dst = cols.data() + (ci * k_ + j) * ncols;
      for (size_t b = 0; b < B; ++b) {
        const double* src = x.data() + (b * cin_ + ci) * L;
        for (size_t t = 0; t < Lo; ++t) {
          const long pos = static_cast<long>(t * stride_ + j) - static_cast<long>(pad_);
          dst[b * Lo + t] = (pos >= 0 && pos < static_cast<long>(L)) ? src[pos] : 0.0;
        }
      }
    }
  }

  RowMat out = mat(weight, cout_, rows) * mat(cols, rows, ncols);
  Tensor y({B, cout_, Lo});
  for (size_t co = 0; co < cout_; ++co) {
    for (size_t b = 0; b < B; ++b) {
      double* dst = y.data() + (b * cout_ + co) * Lo;
      for (size_t t = 0; t < Lo; ++t) dst[t] = out(static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(b * Lo + t)) + bias[co];
    }
  }
  if (cache) {
    cache->batch = B;
    cache->length = L;
    cache->cols = std::move(cols);
  }
  return y;
}

Tensor Conv1d::backward(const Cache& cache, const Tensor& grad_out) {
  const size_t B = cache.batch, L = cache.length, Lo = out_length(L);
  expect_dims(grad_out, {B, cout_, Lo}, "conv1d upstream gradient");
  const size_t rows = cin_ * k_, ncols = B * Lo;

  RowMat G(static_cast<Eigen::Index>(cout_), static_cast<Eigen::Index>(ncols));
  for (size_t co = 0; co < cout_; ++co) {
    for (size_t b = 0; b < B; ++b) {
      const double* src = grad_out.data() + (b * cout_ + co) * Lo;
      for (size_t t = 0; t < Lo; ++t) G(static_cast<Eigen::Index>(co), static_cast<Eigen::Index>(b * Lo + t)) = src[t];
    }
  }
  mat(grad_weight, cout_, rows).noalias() += G * mat(cache.cols, rows, ncols).transpose();
  MapVec(grad_bias.data(), static_cast<Eigen::Index>(cout_)) += G.rowwise().sum().transpose();

  RowMat dcols = mat(weight, cout_, rows).transpose() * G;
  Tensor gx({B, cin_, L});
  for (size_t ci = 0; ci < cin_; ++ci) {
    for (size_t j = 0; j < k_; ++j) {
      const double* src = dcols.data() + (ci * k_ + j) * ncols;
      for (size_t b = 0; b < B; ++b) {
        double* dst = gx.data() + (b * cin_ + ci) * L;
        for (size_t t = 0; t < Lo; ++t) {
          const long pos = static_cast<long>(t * stride_ + j) - static_cast<long>(pad_);
          if (pos >= 0 && pos < static_cast<long>(L)) dst[pos] += src[b * Lo + t];
        }
      }
    }
  }
  return gx;
}

void Conv1d::init(std::mt19937_64& rng) {
  init_uniform_fan_in(weight, cin_ * k_, rng);
  init_uniform_fan_in(bias, cin_ * k_, rng);
}

void Conv1d::zero_grad() {
  grad_weight.fill(0.0);
  grad_bias.fill(0.0);
}

void Conv1d::collect(std::vector<ParamRef>& out, const std::string& prefix, int group) {
  out.push_back({prefix + ".weight", &weight, &grad_weight, group});
  out.push_back({prefix + ".bias", &bias, &grad_bias, group});
}

// ---------------------------------------------------------------- LstmCell

LstmCell::LstmCell(size_t in, size_t hidden)
    : w_ih({4 * hidden, in}),
      w_hh({4 * hidden, hidden}),
      bias({4 * hidden}),
      grad_w_ih({4 * hidden, in}),
      grad_w_hh({4 * hidden, hidden}),
      grad_bias({4 * hidden}),
      in_(in),
      hidden_(hidden) {}

LstmCell::State LstmCell::zero_state(size_t batch) const {
  return {Tensor({batch, hidden_}), Tensor({batch, hidden_})};
}

LstmCell::State LstmCell::forward(const Tensor& x, const State& prev, Cache* cache) const {
  expect_rank2(x, in_, "lstm input");
  const size_t B = x.dim(0), H = hidden_;
  expect_dims(prev.h, {B, H}, "lstm hidden state");
  expect_dims(prev.c, {B, H}, "lstm cell state");

  RowMat gates = mat(x, B, in_) * mat(w_ih, 4 * H, in_).transpose();
  gates.noalias() += mat(prev.h, B, H) * mat(w_hh, 4 * H, H).transpose();
  gates.rowwise() += CMapVec(bias.data(), static_cast<Eigen::Index>(4 * H));

  Tensor i({B, H}), f({B, H}), g({B, H}), o({B, H}), tc({B, H});
  State next{Tensor({B, H}), Tensor({B, H})};
  for (size_t b = 0; b < B; ++b) {
    const double* row = gates.data() + b * 4 * H;
    for (size_t u = 0; u < H; ++u) {
      const size_t k = b * H + u;
      i[k] = sigmoid(row[u]);
      f[k] = sigmoid(row[H + u]);
      g[k] = std::tanh(row[2 * H + u]);
      o[k] = sigmoid(row[3 * H + u]);
      next.c[k] = f[k] * prev.c[k] + i[k] * g[k];
      tc[k] = std::tanh(next.c[k]);
      next.h[k] = o[k] * tc[k];
    }
  }
  if (cache) {
    cache->x = x;
    cache->h_prev = prev.h;
    cache->c_prev = prev.c;
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->g = std::move(g);
    cache->o = std::move(o);
    cache->tanh_c = std::move(tc);
  }
  return next;
}

LstmCell::InputGrads LstmCell::backward(const Cache& cache, const Tensor& grad_h,
                                        const Tensor& grad_c) {
  const size_t B = cache.x.dim(0), H = hidden_;
  expect_dims(grad_h, {B, H}, "lstm upstream hidden gradient");
  expect_dims(grad_c, {B, H}, "lstm upstream cell gradient");

  RowMat dgates(static_cast<Eigen::Index>(B), static_cast<Eigen::Index>(4 * H));
  InputGrads out;
  out.c_prev = Tensor({B, H});
  for (size_t b = 0; b < B; ++b) {
    double* row = dgates.data() + b * 4 * H;
    for (size_t u = 0; u < H; ++u) {
      const size_t k = b * H + u;
      const double i = cache.i[k], f = cache.f[k], g = cache.g[k], o = cache.o[k];
      const double tc = cache.tanh_c[k];
      const double dc = grad_c[k] + grad_h[k] * o * (1.0 - tc * tc);
      row[u] = dc * g * i * (1.0 - i);
      row[H + u] = dc * cache.c_prev[k] * f * (1.0 - f);
      row[2 * H + u] = dc * i * (1.0 - g * g);
      row[3 * H + u] = grad_h[k] * tc * o * (1.0 - o);
      out.c_prev[k] = dc * f;
    }
  }
  mat(grad_w_ih, 4 * H, in_).noalias() += dgates.transpose() * mat(cache.x, B, in_);
  mat(grad_w_hh, 4 * H, H).noalias() += dgates.transpose() * mat(cache.h_prev, B, H);
  MapVec(grad_bias.data(), static_cast<Eigen::Index>(4 * H)) += dgates.colwise().sum();

  out.x = Tensor({B, in_});
  mat(out.x, B, in_).noalias() = dgates * mat(w_ih, 4 * H, in_);
  out.h_prev = Tensor({B, H});
  mat(out.h_prev, B, H).noalias() = dgates * mat(w_hh, 4 * H, H);
  return out;
}

void LstmCell::init(std::mt19937_64& rng) {
  const size_t fan_in = in_ + hidden_;
  init_uniform_fan_in(w_ih, fan_in, rng);
  init_uniform_fan_in(w_hh, fan_in, rng);
  init_uniform_fan_in(bias, fan_in, rng);
}

void LstmCell::zero_grad() {
  grad_w_ih.fill(0.0);
  grad_w_hh.fill(0.0);
  grad_bias.fill(0.0);
}

void LstmCell::collect(std::vector<ParamRef>& out, const std::string& prefix, int group) {
  out.push_back({prefix + ".w_ih", &w_ih, &grad_w_ih, group});
  out.push_back({prefix + ".w_hh", &w_hh, &grad_w_hh, group});
  out.push_back({prefix + ".bias", &bias, &grad_bias, group});
}

// ---------------------------------------------------------------- activations

Tensor relu(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = v > 0.0 ? v : 0.0;
  return y;
}

Tensor relu_backward(const Tensor& x, const Tensor& grad_out) {
  expect_dims(grad_out, x.dims(), "relu upstream gradient");
  Tensor g = grad_out;
  for (size_t k = 0; k < g.size(); ++k) {
    if (!(x[k] > 0.0)) g[k] = 0.0;
  }
  return g;
}

Tensor tanh(const Tensor& x) {
  Tensor y = x;
  for (auto& v : y.values()) v = std::tanh(v);
  return y;
}

Tensor tanh_backward(const Tensor& y, const Tensor& grad_out) {
  expect_dims(grad_out, y.dims(), "tanh upstream gradient");
  Tensor g = grad_out;
  for (size_t k = 0; k < g.size(); ++k) g[k] *= 1.0 - y[k] * y[k];
  return g;
}

Tensor l2norm(const Tensor& x, std::vector<double>* norms) {
  if (x.rank() != 2) throw ShapeError("l2norm input: expected rank 2, got " + dims_to_string(x.dims()));
  const size_t B = x.dim(0), D = x.dim(1);
  Tensor y = x;
  if (norms) norms->assign(B, 0.0);
  for (size_t b = 0; b < B; ++b) {
    double s = 0.0;
    for (size_t d = 0; d < D; ++d) s += x[b * D + d] * x[b * D + d];
    const double n = std::sqrt(s);
    if (!(n > 0.0)) throw ZeroNormError("l2norm: row " + std::to_string(b) + " has zero norm");
    for (size_t d = 0; d < D; ++d) y[b * D + d] /= n;
    if (norms) (*norms)[b] = n;
  }
  return y;
}

Tensor l2norm_backward(const Tensor& y, const std::vector<double>& norms, const Tensor& grad_out) {
  expect_dims(grad_out, y.dims(), "l2norm upstream gradient");
  const size_t B = y.dim(0), D = y.dim(1);
  Tensor g({B, D});
  for (size_t b = 0; b < B; ++b) {
    double dot = 0.0;
    for (size_t d = 0; d < D; ++d) dot += y[b * D + d] * grad_out[b * D + d];
    for (size_t d = 0; d < D; ++d) {
      g[b * D + d] = (grad_out[b * D + d] - y[b * D + d] * dot) / norms[b];
    }
  }
  return g;
}

Tensor concat_cols(const std::vector<const Tensor*>& parts) {
  if (parts.empty()) throw ShapeError("concat of zero tensors");
  const size_t B = parts.front()->dim(0);
  size_t total = 0;
  for (const Tensor* p : parts) {
    if (p->rank() != 2 || p->dim(0) != B) throw ShapeError("concat: mismatched batch dims " + dims_to_string(p->dims()));
    total += p->dim(1);
  }
  Tensor out({B, total});
  for (size_t b = 0; b < B; ++b) {
    size_t off = 0;
    for (const Tensor* p : parts) {
      const size_t w = p->dim(1);
      std::copy_n(p->data() + b * w, w, out.data() + b * total + off);
      off += w;
    }
  }
  return out;
}

std::vector<Tensor> split_cols(const Tensor& t, const std::vector<size_t>& widths) {
  const size_t B = t.dim(0), total = t.dim(1);
  std::vector<Tensor> out;
  out.reserve(widths.size());
  size_t off = 0;
  for (size_t w : widths) {
    Tensor p({B, w});
    for (size_t b = 0; b < B; ++b) std::copy_n(t.data() + b * total + off, w, p.data() + b * w);
    out.push_back(std::move(p));
    off += w;
  }
  if (off != total) throw ShapeError("split widths do not sum to tensor width");
  return out;
}

}  // namespace okd::nn
