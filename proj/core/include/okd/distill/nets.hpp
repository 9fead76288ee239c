#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "okd/nn/layers.hpp"
#include "okd/sim/types.hpp"

namespace okd::distill {

using nn::ParamRef;
using nn::Tensor;

/// Optimizer groups: image encoders train at lr_encoder, everything else at lr_action.
inline constexpr int kEncoderGroup = 0;
inline constexpr int kActionGroup = 1;

struct NetConfig {
  size_t rays = 64;          // W
  size_t embed = 64;         // E, shared by z1 and z2
  size_t goal_embed = 16;
  size_t head_hidden = 64;
  int seq_len = 5;           // student window L
};

/// conv1d(c->16, k5, s2) -> relu -> conv1d(16->32, k5, s2) -> relu -> dense(-> E)
/// over a [batch, channels, rays] input.
class ImageEncoder {
 public:
  struct Cache {
    nn::Conv1d::Cache c1, c2;
    Tensor a1, a2;  // conv outputs before relu
    nn::Dense::Cache fc;
  };
  ImageEncoder() = default;
  ImageEncoder(size_t channels, size_t rays, size_t embed);

  Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
  Tensor backward(const Cache& cache, const Tensor& grad_out);
  void init(std::mt19937_64& rng);
  void zero_grad();
  void collect(std::vector<ParamRef>& out, const std::string& prefix, int group);

  size_t channels() const { return channels_; }
  size_t rays() const { return rays_; }

  nn::Conv1d conv1, conv2;
  nn::Dense fc;

 private:
  size_t channels_ = 0, rays_ = 0, flat_ = 0;
};

/// Two dense layers with a relu between them.
class Mlp {
 public:
  struct Cache {
    nn::Dense::Cache d1, d2;
    Tensor h;  // first layer output before relu
  };
  Mlp() = default;
  Mlp(size_t in, size_t hidden, size_t out);

  Tensor forward(const Tensor& x, Cache* cache = nullptr) const;
  Tensor backward(const Cache& cache, const Tensor& grad_out);
  void init(std::mt19937_64& rng);
  void zero_grad();
  void collect(std::vector<ParamRef>& out, const std::string& prefix, int group);

  nn::Dense d1, d2;
};

struct NetOutput {
  Tensor z;       // [batch, E]
  Tensor action;  // [batch, 3]
};

/// Omni-depth policy. One encoder is shared by the four camera parts; the part
/// embeddings and a goal embedding are linearly projected to z1.
class TeacherNet {
 public:
  struct Cache {
    size_t batch = 0;
    ImageEncoder::Cache enc;
    Mlp::Cache goal;
    nn::Dense::Cache lp;
    Mlp::Cache head;
  };
  TeacherNet() = default;
  TeacherNet(const NetConfig& cfg, std::uint64_t seed);

  /// depth [batch, 4, W], goal [batch, 2].
  NetOutput forward(const Tensor& depth, const Tensor& goal, Cache* cache = nullptr) const;
  /// Accumulates parameter gradients; either upstream gradient may be empty.
  void backward(const Cache& cache, const Tensor& grad_z, const Tensor& grad_action);

  std::vector<ParamRef> parameters();
  void zero_grad();
  const NetConfig& config() const { return cfg_; }

  ImageEncoder encoder;
  Mlp goal_encoder;
  nn::Dense lp;
  Mlp head;

 private:
  NetConfig cfg_;
};

/// Single-view rgb policy over a window of L frames. Each frame is encoded,
/// fused with its goal embedding, and fed to an LSTM from a zero state; z2 is
/// the final hidden state.
class StudentNet {
 public:
  struct Cache {
    size_t batch = 0;
    ImageEncoder::Cache enc;
    Mlp::Cache goal;
    nn::Dense::Cache fusion;
    Tensor fused_pre;  // fusion output before relu, rows ordered b * L + t
    std::vector<nn::LstmCell::Cache> steps;
    Mlp::Cache head;
  };
  StudentNet() = default;
  StudentNet(const NetConfig& cfg, std::uint64_t seed);

  /// rgb [batch, L, 3, W], goal [batch, L, 2]. Throws SequenceLengthError unless L == seq_len.
  NetOutput forward(const Tensor& rgb, const Tensor& goal, Cache* cache = nullptr) const;
  void backward(const Cache& cache, const Tensor& grad_z, const Tensor& grad_action);

  std::vector<ParamRef> parameters();
  void zero_grad();
  const NetConfig& config() const { return cfg_; }

  ImageEncoder encoder;
  Mlp goal_encoder;
  nn::Dense fusion;
  nn::LstmCell lstm;
  Mlp head;

 private:
  NetConfig cfg_;
};

/// Unbatched conveniences.
struct Embedded {
  std::vector<double> z;
  sim::Action action;
};
/// omni_depth is [4][W] camera-major, as stored in an Observation.
Embedded teacher_forward(const TeacherNet& net, const std::vector<double>& omni_depth,
                         sim::Vec2 goal_local);
/// rgb_seq is L frames of camera-0 rgb, each [3][W].
Embedded student_forward(const StudentNet& net, const std::vector<std::vector<double>>& rgb_seq,
                         const std::vector<sim::Vec2>& goal_seq);

sim::Action to_action(const Tensor& actions, size_t row);

}  // namespace okd::distill
