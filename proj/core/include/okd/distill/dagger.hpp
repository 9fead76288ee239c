#pragma once

#include <cstdint>
#include <deque>
#include <random>

#include "okd/distill/nets.hpp"
#include "okd/distill/train.hpp"
#include "okd/expert/expert.hpp"
#include "okd/sim/suite.hpp"

namespace okd::distill {

/// Closed-loop student: keeps the last L camera-0 frames, repeating the first
/// frame of the episode until the window is full. Frames are rounded to single
/// precision, as they are when stored in a dataset.
class StudentPolicy final : public sim::Policy {
 public:
  explicit StudentPolicy(const StudentNet& net) : net_(net) {}
  void reset() override;
  sim::Action act(const sim::StepInput& in) override;

 private:
  const StudentNet& net_;
  std::deque<std::vector<double>> frames_;
  std::deque<sim::Vec2> goals_;
};

/// Closed-loop teacher on the omni depth of the current frame.
class TeacherPolicy final : public sim::Policy {
 public:
  explicit TeacherPolicy(const TeacherNet& net) : net_(net) {}
  sim::Action act(const sim::StepInput& in) override;

 private:
  const TeacherNet& net_;
};

/// Executes the expert's label with probability beta, otherwise the learner's
/// action. The learner is queried every step so its history stays current.
class MixturePolicy final : public sim::Policy {
 public:
  MixturePolicy(sim::Policy& learner, double beta, std::uint64_t seed);
  void reset() override { learner_.reset(); }
  sim::Action act(const sim::StepInput& in) override;

 private:
  sim::Policy& learner_;
  double beta_;
  std::mt19937_64 rng_;
};

struct DaggerOptions {
  sim::SimConfig sim;
  sim::SceneGenOptions gen;
  expert::ExpertConfig expert;
  EpochHook on_epoch;  // epoch index counted across all rounds
};

/// Rolls out the beta-mixture of student and expert; stored labels are always
/// the expert's. Throws RangeError unless beta is in [0, 1].
sim::Dataset dagger_collect(const StudentNet& student, const sim::SceneSuite& suite, double beta,
                            int episodes, std::uint64_t seed, const DaggerOptions& opts = {});

struct DaggerResult {
  LossTrace trace;
  sim::Dataset aggregated;
  std::vector<size_t> sizes;  // aggregated size after each round, starting with the initial set
};

/// Full student schedule: one training round on the initial data, then for
/// i = 1..dagger_iterations collect dagger_episodes with beta = dagger_beta^i,
/// aggregate and train another round. cfg.student_epochs is split over the
/// rounds and lambda1 decays across all of them.
DaggerResult train_student_dagger(StudentNet& net, const TeacherNet* teacher,
                                  const sim::Dataset& initial, const sim::SceneSuite& suite,
                                  const TrainConfig& cfg, bool with_distillation,
                                  const DaggerOptions& opts = {});

}  // namespace okd::distill
