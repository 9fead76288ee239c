#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "okd/distill/nets.hpp"
#include "okd/nn/optim.hpp"
#include "okd/sim/dataset.hpp"
#include "okd/sim/suite.hpp"

namespace okd::distill {

struct TrainConfig {
  size_t teacher_batch = 64;
  size_t student_batch = 32;
  double lr_encoder = 1e-5;
  double lr_action = 1e-4;
  double tau = 0.1;
  double lambda0 = 1.0;
  double lambda1_start = 0.9;
  double lambda1_end = 0.1;
  int teacher_epochs = 20;
  int student_epochs = 20;
  double delta_min = 0.5;  // m, minimum pairwise distance inside a student batch
  int dagger_iterations = 4;
  int dagger_episodes = 200;
  double dagger_beta = 0.5;  // beta_i = dagger_beta^i
  std::uint64_t seed = 0;
};

/// Throws ConfigError naming the offending field.
void validate(const TrainConfig& cfg);

/// Linear from lambda1_start at epoch 0 to lambda1_end at epoch total_epochs - 1.
/// Throws RangeError unless 0 <= epoch < total_epochs.
double lambda1_schedule(int epoch, int total_epochs, const TrainConfig& cfg);

/// N distinct indices with pairwise distance >= delta_min. Seeded shuffle-and-accept
/// passes are tried first, then greedy farthest-point selection.
/// When groups is non-empty it holds one key per position and positions in
/// different groups (different obstacle layouts) count as arbitrarily far apart.
/// Throws SpacingInfeasibleError when even the greedy pass cannot reach N.
std::vector<size_t> batch_sample_spaced(std::span<const sim::Vec2> positions,
                                        std::span<const std::uint64_t> groups, size_t n,
                                        double delta_min, std::uint64_t seed,
                                        int attempt_budget = 8);
std::vector<size_t> batch_sample_spaced(const sim::Dataset& ds, size_t n, double delta_min,
                                        std::uint64_t seed, int attempt_budget = 8);

/// Maps a dataset scene_id to its obstacle-layout key.
using LayoutMap = std::unordered_map<std::uint32_t, std::uint64_t>;
/// scene_id -> layout seed for every scene of a suite.
LayoutMap layout_map(const sim::SceneSuite& suite);

// Batch assembly from dataset rows.
Tensor depth_batch(const sim::Dataset& ds, std::span<const size_t> idx);      // [B, 4, W]
Tensor goal_batch(const sim::Dataset& ds, std::span<const size_t> idx);       // [B, 2]
Tensor label_batch(const sim::Dataset& ds, std::span<const size_t> idx);      // [B, 3]
/// Camera-0 rgb windows ending at each row, [B, L, 3, W], and their goals [B, L, 2].
Tensor rgb_window_batch(const sim::Dataset& ds, std::span<const size_t> idx, int length);
Tensor goal_window_batch(const sim::Dataset& ds, std::span<const size_t> idx, int length);

struct LossRow {
  std::int64_t step = 0;
  int epoch = 0;
  double l_act = 0.0;
  double l_con = 0.0;
  double lambda1 = 0.0;
  double total = 0.0;
};
using LossTrace = std::vector<LossRow>;

/// Columns step,epoch,L_act,L_con,lambda1,total with full double precision.
void write_loss_csv(const LossTrace& trace, const std::filesystem::path& path);

struct BatchLoss {
  double l_act = 0.0;
  double l_con = 0.0;
  double total = 0.0;
};

/// Teacher imitation loss on one batch; with accumulate, gradients are added to the net.
BatchLoss teacher_batch_loss(TeacherNet& net, const Tensor& depth, const Tensor& goal,
                             const Tensor& labels, bool accumulate);

/// lambda0 * L_act + lambda1 * InfoNCE(z1, z2). L_con is evaluated whenever z1 is
/// given, but contributes gradient only through lambda1.
BatchLoss student_batch_loss(StudentNet& net, const Tensor& rgb, const Tensor& goal,
                             const Tensor& labels, const Tensor* z1, double lambda0,
                             double lambda1, double tau, bool accumulate);

/// Called after every epoch with the epoch index.
using EpochHook = std::function<void(int)>;

/// Behaviour cloning of the stored expert labels on shuffled minibatches.
/// Throws NonFiniteError if the loss or a gradient stops being finite.
LossTrace train_teacher(TeacherNet& net, const sim::Dataset& ds, const TrainConfig& cfg,
                        const EpochHook& hook = {});

/// Teacher embeddings for every row, [N, E].
Tensor teacher_embeddings(const TeacherNet& teacher, const sim::Dataset& ds);

/// Student optimisation that can be resumed on a growing dataset (DAgger).
/// The teacher is only read. With with_distillation false lambda1 is 0 and the
/// teacher may be null.
class StudentTrainer {
 public:
  StudentTrainer(StudentNet& net, const TeacherNet* teacher, const TrainConfig& cfg,
                 bool with_distillation);

  /// Spacing is then only enforced between poses of the same layout.
  void set_layouts(LayoutMap layouts) { layouts_ = std::move(layouts); }

  /// Runs `epochs` more epochs on ds; lambda1 follows the schedule over total_epochs.
  void train(const sim::Dataset& ds, int epochs, int total_epochs, const EpochHook& hook = {});

  const LossTrace& trace() const { return trace_; }
  int epochs_done() const { return epoch_; }

 private:
  StudentNet& net_;
  const TeacherNet* teacher_;
  TrainConfig cfg_;
  bool distill_;
  std::vector<ParamRef> params_;
  nn::Adam adam_;
  LayoutMap layouts_;
  LossTrace trace_;
  int epoch_ = 0;
  std::int64_t step_ = 0;
};

LossTrace train_student(StudentNet& net, const TeacherNet* teacher, const sim::Dataset& ds,
                        const TrainConfig& cfg, bool with_distillation,
                        const EpochHook& hook = {});

}  // namespace okd::distill
