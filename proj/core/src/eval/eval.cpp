#include "okd/eval/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "okd/distill/losses.hpp"
#include "okd/distill/train.hpp"
#include "okd/errors.hpp"
#include "okd/sim/world.hpp"

namespace okd::eval {

using distill::NetOutput;
using nn::Tensor;

namespace {

constexpr size_t kChunk = 256;

std::vector<sim::Action> actions_of(const Tensor& t) {
  std::vector<sim::Action> out(t.dim(0));
  for (size_t i = 0; i < out.size(); ++i) out[i] = distill::to_action(t, i);
  return out;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  return os;
}

std::vector<double> as_float_precision(const std::vector<double>& v, size_t n) {
  std::vector<double> out(n);
  for (size_t i = 0; i < n; ++i) out[i] = static_cast<float>(v[i]);
  return out;
}

}  // namespace

std::vector<sim::Action> TeacherOffline::predict(const sim::Dataset& ds,
                                                 std::span<const size_t> idx) const {
  return actions_of(net_.forward(distill::depth_batch(ds, idx), distill::goal_batch(ds, idx)).action);
}

std::vector<sim::Action> StudentOffline::predict(const sim::Dataset& ds,
                                                 std::span<const size_t> idx) const {
  const int L = net_.config().seq_len;
  return actions_of(net_.forward(distill::rgb_window_batch(ds, idx, L),
                                 distill::goal_window_batch(ds, idx, L))
                        .action);
}

std::vector<sim::Action> FunctionOffline::predict(const sim::Dataset& ds,
                                                  std::span<const size_t> idx) const {
  std::vector<sim::Action> out;
  out.reserve(idx.size());
  for (size_t i : idx) out.push_back(fn_(ds, i));
  return out;
}

void check_modality(const sim::Dataset& ds, Modality m) {
  const size_t W = ds.rays_per_camera;
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.records[i];
    if (m == Modality::OmniDepth && (ds.camera_count != 4 || r.depth.size() != 4 * W)) {
      throw ModalityError("row " + std::to_string(i) + " lacks omni depth needed by the policy");
    }
    if (m == Modality::SingleRgb && r.rgb.size() < 3 * W) {
      throw ModalityError("row " + std::to_string(i) + " lacks the rgb view needed by the policy");
    }
  }
}

double action_error(const OfflinePolicy& policy, const sim::Dataset& ds) {
  if (ds.empty()) throw RangeError("action error of an empty dataset");
  check_modality(ds, policy.modality());
  double total = 0.0;
  std::vector<size_t> idx;
  for (size_t start = 0; start < ds.size(); start += kChunk) {
    idx.resize(std::min(kChunk, ds.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const auto pred = policy.predict(ds, idx);
    for (size_t b = 0; b < idx.size(); ++b) {
      const auto& a = ds.records[idx[b]].expert_action;
      total += std::sqrt(std::pow(pred[b].vx - a.vx, 2) + std::pow(pred[b].vy - a.vy, 2) +
                         std::pow(pred[b].omega - a.omega, 2));
    }
  }
  return total / static_cast<double>(ds.size());
}

BenchmarkReport summarise(std::vector<EpisodeSummary> episodes) {
  BenchmarkReport r;
  r.episodes = episodes.size();
  if (!episodes.empty()) {
    double succ = 0.0, sum = 0.0;
    for (const auto& e : episodes) {
      succ += e.outcome == sim::Outcome::Success ? 1.0 : 0.0;
      sum += e.moving_distance;
    }
    const double n = static_cast<double>(episodes.size());
    r.sr = succ / n;
    r.md_mean = sum / n;
    double var = 0.0;
    for (const auto& e : episodes) var += (e.moving_distance - r.md_mean) * (e.moving_distance - r.md_mean);
    r.md_std = std::sqrt(var / n);
  }
  r.per_episode = std::move(episodes);
  return r;
}

BenchmarkReport run_benchmark(sim::Policy& policy, sim::Policy& expert, const sim::SceneSuite& suite,
                              const BenchmarkOptions& opts) {
  if (suite.empty()) throw RangeError("benchmark suite is empty");
  if (opts.episodes_per_scene < 1) throw RangeError("episodes_per_scene must be >= 1");
  std::vector<EpisodeSummary> eps;
  sim::RolloutOptions ro;
  ro.horizon = opts.sim.horizon;
  const size_t per = static_cast<size_t>(opts.episodes_per_scene);
  for (size_t s = 0; s < suite.size(); ++s) {
    for (size_t k = 0; k < per; ++k) {
      const size_t e = s * per + k;
      const auto& scene = suite.scenes[s];
      ro.noise_seed = sim::mix_seed(opts.seed ^ 0xbe7c4ULL, e);
      sim::EpisodeRecord rec;
      try {
        const auto layout = sim::resample_start_goal(scene.layout, sim::mix_seed(opts.seed, e), opts.gen);
        rec = sim::rollout(policy, layout, scene.skin, expert, opts.sim, ro);
      } catch (const PolicyFaultError& err) {
        throw PolicyFaultError("episode " + std::to_string(e) + ": " + err.what());
      } catch (const RenderFromCollisionError& err) {
        throw RenderFromCollisionError("episode " + std::to_string(e) + ": " + err.what());
      } catch (const PlacementInfeasibleError& err) {
        throw PlacementInfeasibleError("episode " + std::to_string(e) + ": " + err.what());
      }
      eps.push_back({e, scene.scene_id, rec.outcome, rec.moving_distance, rec.final_goal_distance,
                     rec.tuples.size(), rec.total_reward});
    }
  }
  return summarise(std::move(eps));
}

SimilarityReport embedding_similarity(const EmbedFn& embed, const sim::SceneLayout& layout,
                                      const std::vector<sim::AppearanceSkin>& skins,
                                      const std::vector<Probe>& probes) {
  if (skins.size() < 2) throw RangeError("embedding similarity needs at least 2 skins");
  if (probes.empty()) throw RangeError("embedding similarity needs at least one probe pose");
  const size_t S = skins.size(), P = probes.size();
  SimilarityReport r;
  r.pair_matrix.assign(S, std::vector<double>(S, 0.0));
  r.per_pose.assign(P, 0.0);
  double grand = 0.0;
  for (size_t p = 0; p < P; ++p) {
    std::vector<std::vector<double>> z(S);
    for (size_t s = 0; s < S; ++s) {
      z[s] = embed(layout, skins[s], probes[p]);
      if (std::all_of(z[s].begin(), z[s].end(), [](double v) { return v == 0.0; })) {
        throw ZeroNormError("zero embedding at probe " + std::to_string(p) + " with skin " +
                            std::to_string(s));
      }
    }
    for (size_t a = 0; a < S; ++a) {
      for (size_t b = a + 1; b < S; ++b) {
        const double c = distill::cosine_similarity(z[a], z[b]);
        r.pair_matrix[a][b] += c;
        r.per_pose[p] += c;
        grand += c;
      }
    }
    r.per_pose[p] /= static_cast<double>(S * (S - 1) / 2);
  }
  for (size_t a = 0; a < S; ++a) {
    r.pair_matrix[a][a] = 1.0;
    for (size_t b = a + 1; b < S; ++b) {
      r.pair_matrix[a][b] /= static_cast<double>(P);
      r.pair_matrix[b][a] = r.pair_matrix[a][b];
    }
  }
  r.pairs = P * S * (S - 1) / 2;
  r.mu = grand / static_cast<double>(r.pairs);
  return r;
}

std::vector<Probe> expert_probes(const sim::SceneLayout& layout, const sim::AppearanceSkin& skin,
                                 sim::Policy& expert, const sim::SimConfig& cfg, int stride,
                                 int length) {
  if (stride < 1 || length < 1) throw RangeError("probe stride and length must be >= 1");
  sim::ExpertPassthroughPolicy follow;
  sim::RolloutOptions ro;
  ro.horizon = cfg.horizon;
  const auto rec = sim::rollout(follow, layout, skin, expert, cfg, ro);
  std::vector<Probe> probes;
  for (size_t t = 0; t < rec.tuples.size(); t += static_cast<size_t>(stride)) {
    Probe p;
    for (int k = length - 1; k >= 0; --k) {
      const size_t j = t >= static_cast<size_t>(k) ? t - static_cast<size_t>(k) : 0;
      p.poses.push_back(rec.tuples[j].pose);
      p.goals.push_back(rec.tuples[j].goal_local);
    }
    probes.push_back(std::move(p));
  }
  return probes;
}

EmbedFn teacher_embedder(const distill::TeacherNet& net, const sim::SimConfig& cfg) {
  return [&net, cfg](const sim::SceneLayout& layout, const sim::AppearanceSkin& skin,
                     const Probe& probe) {
    const auto obs = sim::raycast(layout, skin, probe.poses.back(), cfg.rig, cfg.d_max, cfg.d_shade);
    return distill::teacher_forward(net, as_float_precision(obs.depth, obs.depth.size()),
                                    probe.goals.back())
        .z;
  };
}

EmbedFn student_embedder(const distill::StudentNet& net, const sim::SimConfig& cfg) {
  return [&net, cfg](const sim::SceneLayout& layout, const sim::AppearanceSkin& skin,
                     const Probe& probe) {
    std::vector<std::vector<double>> frames;
    for (const auto& pose : probe.poses) {
      const auto obs = sim::raycast(layout, skin, pose, cfg.rig, cfg.d_max, cfg.d_shade);
      frames.push_back(as_float_precision(obs.rgb, 3 * static_cast<size_t>(obs.rays)));
    }
    return distill::student_forward(net, frames, probe.goals).z;
  };
}

RowEmbedFn teacher_row_embedder(const distill::TeacherNet& net) {
  return [&net](const sim::Dataset& ds, size_t i) {
    const size_t idx[1] = {i};
    return net.forward(distill::depth_batch(ds, idx), distill::goal_batch(ds, idx)).z.storage();
  };
}

RowEmbedFn student_row_embedder(const distill::StudentNet& net) {
  return [&net](const sim::Dataset& ds, size_t i) {
    const size_t idx[1] = {i};
    const int L = net.config().seq_len;
    return net.forward(distill::rgb_window_batch(ds, idx, L), distill::goal_window_batch(ds, idx, L))
        .z.storage();
  };
}

size_t export_embeddings(const RowEmbedFn& embed, const sim::Dataset& ds,
                         const std::filesystem::path& path) {
  std::vector<std::vector<double>> rows;
  rows.reserve(ds.size());
  for (size_t i = 0; i < ds.size(); ++i) rows.push_back(embed(ds, i));
  auto os = open_out(path);
  os << "scene_id,step,x,y,psi";
  const size_t E = rows.empty() ? 0 : rows.front().size();
  for (size_t k = 0; k < E; ++k) os << ",e" << k;
  os << '\n';
  for (size_t i = 0; i < ds.size(); ++i) {
    const auto& r = ds.records[i];
    os << r.scene_id << ',' << r.step << ',' << fmt(r.pose.x) << ',' << fmt(r.pose.y) << ','
       << fmt(r.pose.psi);
    for (double v : rows[i]) os << ',' << fmt(v);
    os << '\n';
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
  return ds.size();
}

void write_episode_csv(const BenchmarkReport& r, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "episode,scene_id,outcome,moving_distance,final_goal_distance,steps,total_reward\n";
  for (const auto& e : r.per_episode) {
    os << e.episode << ',' << e.scene_id << ',' << sim::to_string(e.outcome) << ','
       << fmt(e.moving_distance) << ',' << fmt(e.final_goal_distance) << ',' << e.steps << ','
       << fmt(e.total_reward) << '\n';
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

std::string summary_text(const BenchmarkReport& r) {
  size_t counts[3] = {0, 0, 0};
  for (const auto& e : r.per_episode) ++counts[static_cast<int>(e.outcome)];
  std::ostringstream os;
  os << "episodes: " << r.episodes << '\n'
     << "sr: " << fmt(r.sr) << '\n'
     << "md_mean: " << fmt(r.md_mean) << '\n'
     << "md_std: " << fmt(r.md_std) << '\n'
     << "success: " << counts[0] << '\n'
     << "collision: " << counts[1] << '\n'
     << "timeout: " << counts[2] << '\n';
  return os.str();
}

void write_similarity_csv(const SimilarityReport& r, const std::filesystem::path& path) {
  auto os = open_out(path);
  os << "probe,similarity\n";
  for (size_t p = 0; p < r.per_pose.size(); ++p) os << p << ',' << fmt(r.per_pose[p]) << '\n';
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

}  // namespace okd::eval
