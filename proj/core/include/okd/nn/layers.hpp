#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "okd/nn/tensor.hpp"

namespace okd::nn {

/// Handle to one trainable tensor and its gradient accumulator.
struct ParamRef {
  std::string name;
  Tensor* value = nullptr;
  Tensor* grad = nullptr;
  int group = 0;  // optimizer learning-rate group
};

enum class LayerKind { Dense, Conv1d, LstmCell, Relu, Tanh, L2Norm };

/// Kind plus the size parameters that determine parameter shapes.
struct LayerSpec {
  LayerKind kind = LayerKind::Dense;
  size_t in = 0;       // dense/lstm input width, conv input channels
  size_t out = 0;      // dense output width, conv output channels, lstm hidden size
  size_t kernel = 0;   // conv only
  size_t stride = 1;   // conv only
  size_t padding = 0;  // conv only
};

/// Draws uniform(-sqrt(1/fan_in), +sqrt(1/fan_in)) into t.
void init_uniform_fan_in(Tensor& t, size_t fan_in, std::mt19937_64& rng);

/// y = x W^T + b on a [batch, in] input.
class Dense {
 public:
  struct Cache {
    Tensor x;
  };

  Dense() = default;
  Dense(size_t in, size_t out);

  LayerSpec spec() const { return {LayerKind::Dense, in_, out_}; }
  size_t in_features() const { return in_; }
  size_t out_features() const { return out_; }

  Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients and returns d(loss)/dx.
  Tensor backward(const Cache& cache, const Tensor& grad_out);

  void init(std::mt19937_64& rng);
  void zero_grad();
  void collect(std::vector<ParamRef>& out, const std::string& prefix, int group);

  Tensor weight, bias;
  Tensor grad_weight, grad_bias;

 private:
  size_t in_ = 0, out_ = 0;
};

/// 1-D convolution over [batch, channels, length] with zero padding.
class Conv1d {
 public:
  struct Cache {
    size_t batch = 0;
    size_t length = 0;
    Tensor cols;  // [in_channels * kernel, batch * out_length]
  };

  Conv1d() = default;
  Conv1d(size_t in_channels, size_t out_channels, size_t kernel, size_t stride = 1,
         size_t padding = 0);

  LayerSpec spec() const { return {LayerKind::Conv1d, cin_, cout_, k_, stride_, pad_}; }
  size_t out_length(size_t length) const;
  size_t out_channels() const { return cout_; }

  Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
  Tensor backward(const Cache& cache, const Tensor& grad_out);

  void init(std::mt19937_64& rng);
  void zero_grad();
  void collect(std::vector<ParamRef>& out, const std::string& prefix, int group);

  Tensor weight, bias;  // [out, in, kernel], [out]
  Tensor grad_weight, grad_bias;

 private:
  size_t cin_ = 0, cout_ = 0, k_ = 0, stride_ = 1, pad_ = 0;
};

/// Standard LSTM cell with gate order (input, forget, cell, output).
class LstmCell {
 public:
  struct State {
    Tensor h;  // [batch, hidden]
    Tensor c;
  };
  struct Cache {
    Tensor x, h_prev, c_prev;
    Tensor i, f, g, o;  // gate activations
    Tensor tanh_c;
  };

  LstmCell() = default;
  LstmCell(size_t in, size_t hidden);

  LayerSpec spec() const { return {LayerKind::LstmCell, in_, hidden_}; }
  size_t hidden() const { return hidden_; }
  State zero_state(size_t batch) const;

  State forward(const Tensor& x, const State& prev, Cache* cache = nullptr) const;

  struct InputGrads {
    Tensor x, h_prev, c_prev;
  };
  /// grad_h and grad_c are gradients w.r.t. the new hidden and cell state.
  InputGrads backward(const Cache& cache, const Tensor& grad_h, const Tensor& grad_c);

  void init(std::mt19937_64& rng);
  void zero_grad();
  void collect(std::vector<ParamRef>& out, const std::string& prefix, int group);

  Tensor w_ih, w_hh, bias;  // [4H, in], [4H, H], [4H]
  Tensor grad_w_ih, grad_w_hh, grad_bias;

 private:
  size_t in_ = 0, hidden_ = 0;
};

// Stateless element-wise and row-wise operations.

Tensor relu(const Tensor& x);
/// Gradient of relu given its input.
Tensor relu_backward(const Tensor& x, const Tensor& grad_out);

Tensor tanh(const Tensor& x);
/// Gradient of tanh given its output.
Tensor tanh_backward(const Tensor& y, const Tensor& grad_out);

/// Normalises each row of a [batch, d] tensor to unit length. Zero rows throw ZeroNormError.
Tensor l2norm(const Tensor& x, std::vector<double>* norms = nullptr);
/// Gradient of l2norm given its output and the input row norms.
Tensor l2norm_backward(const Tensor& y, const std::vector<double>& norms, const Tensor& grad_out);

/// Concatenates [batch, *] tensors along dimension 1.
Tensor concat_cols(const std::vector<const Tensor*>& parts);
/// Splits grad of a column concatenation back into per-part gradients.
std::vector<Tensor> split_cols(const Tensor& t, const std::vector<size_t>& widths);

}  // namespace okd::nn
