#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "okd/distill/nets.hpp"
#include "okd/sim/dataset.hpp"
#include "okd/sim/suite.hpp"

namespace okd::eval {

enum class Modality { OmniDepth, SingleRgb, None };

/// A policy evaluated offline against stored dataset rows.
class OfflinePolicy {
 public:
  virtual ~OfflinePolicy() = default;
  virtual Modality modality() const = 0;
  /// Actions for rows idx of ds, in order.
  virtual std::vector<sim::Action> predict(const sim::Dataset& ds,
                                           std::span<const size_t> idx) const = 0;
};

class TeacherOffline final : public OfflinePolicy {
 public:
  explicit TeacherOffline(const distill::TeacherNet& net) : net_(net) {}
  Modality modality() const override { return Modality::OmniDepth; }
  std::vector<sim::Action> predict(const sim::Dataset& ds, std::span<const size_t> idx) const override;

 private:
  const distill::TeacherNet& net_;
};

class StudentOffline final : public OfflinePolicy {
 public:
  explicit StudentOffline(const distill::StudentNet& net) : net_(net) {}
  Modality modality() const override { return Modality::SingleRgb; }
  std::vector<sim::Action> predict(const sim::Dataset& ds, std::span<const size_t> idx) const override;

 private:
  const distill::StudentNet& net_;
};

/// Wraps a function of the row index, for label-derived reference policies.
class FunctionOffline final : public OfflinePolicy {
 public:
  using Fn = std::function<sim::Action(const sim::Dataset&, size_t)>;
  explicit FunctionOffline(Fn fn, Modality m = Modality::None) : fn_(std::move(fn)), m_(m) {}
  Modality modality() const override { return m_; }
  std::vector<sim::Action> predict(const sim::Dataset& ds, std::span<const size_t> idx) const override;

 private:
  Fn fn_;
  Modality m_;
};

/// Throws ModalityError unless every row carries what the modality needs.
void check_modality(const sim::Dataset& ds, Modality m);

/// Mean over rows of |policy(row) - expert label|_2. Throws ModalityError when
/// the dataset lacks the policy's input.
double action_error(const OfflinePolicy& policy, const sim::Dataset& ds);

struct EpisodeSummary {
  size_t episode = 0;
  std::uint32_t scene_id = 0;
  sim::Outcome outcome = sim::Outcome::Timeout;
  double moving_distance = 0.0;
  double final_goal_distance = 0.0;
  size_t steps = 0;
  double total_reward = 0.0;
};

struct BenchmarkReport {
  double sr = 0.0;
  double md_mean = 0.0;
  double md_std = 0.0;  // population standard deviation
  size_t episodes = 0;
  std::vector<EpisodeSummary> per_episode;
};

struct BenchmarkOptions {
  int episodes_per_scene = 20;
  std::uint64_t seed = 0;
  sim::SimConfig sim;
  sim::SceneGenOptions gen;
};

/// Runs episodes_per_scene episodes on every scene of the suite, start and goal
/// resampled per episode. Errors from a rollout are rethrown with the episode index.
BenchmarkReport run_benchmark(sim::Policy& policy, sim::Policy& expert, const sim::SceneSuite& suite,
                              const BenchmarkOptions& opts);

/// SR and MD statistics from episode records.
BenchmarkReport summarise(std::vector<EpisodeSummary> episodes);

/// A probe: the last L poses of a trajectory (oldest first) with their local goals.
struct Probe {
  std::vector<sim::Pose> poses;
  std::vector<sim::Vec2> goals;
};

/// Embedding of a probe rendered in a given scene appearance.
using EmbedFn = std::function<std::vector<double>(const sim::SceneLayout&,
                                                  const sim::AppearanceSkin&, const Probe&)>;

struct SimilarityReport {
  double mu = 0.0;
  std::vector<double> per_pose;               // mean over skin pairs, one per probe
  std::vector<std::vector<double>> pair_matrix;  // [skin][skin], mean over probes, diagonal 1
  size_t pairs = 0;
};

/// Cosine similarity of the embeddings of every unordered skin pair at every probe.
/// Throws RangeError with fewer than 2 skins or no probes, ZeroNormError naming
/// the probe and skin when an embedding is zero.
SimilarityReport embedding_similarity(const EmbedFn& embed, const sim::SceneLayout& layout,
                                      const std::vector<sim::AppearanceSkin>& skins,
                                      const std::vector<Probe>& probes);

/// Probes from an expert rollout on layout/skin, every `stride` steps, windows of `length`.
std::vector<Probe> expert_probes(const sim::SceneLayout& layout, const sim::AppearanceSkin& skin,
                                 sim::Policy& expert, const sim::SimConfig& cfg, int stride = 5,
                                 int length = 5);

/// Teacher z1 from the omni depth at the probe's last pose.
EmbedFn teacher_embedder(const distill::TeacherNet& net, const sim::SimConfig& cfg);
/// Student z2 from the camera-0 rgb of all probe poses.
EmbedFn student_embedder(const distill::StudentNet& net, const sim::SimConfig& cfg);

/// Embedding of one dataset row.
using RowEmbedFn = std::function<std::vector<double>(const sim::Dataset&, size_t)>;
RowEmbedFn teacher_row_embedder(const distill::TeacherNet& net);
RowEmbedFn student_row_embedder(const distill::StudentNet& net);

/// CSV scene_id,step,x,y,psi,e0..e{E-1}; returns the number of rows written.
size_t export_embeddings(const RowEmbedFn& embed, const sim::Dataset& ds,
                         const std::filesystem::path& path);

/// Per-episode CSV and a key: value summary.
void write_episode_csv(const BenchmarkReport& r, const std::filesystem::path& path);
std::string summary_text(const BenchmarkReport& r);
void write_similarity_csv(const SimilarityReport& r, const std::filesystem::path& path);

}  // namespace okd::eval
