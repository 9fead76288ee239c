#include "okd/distill/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include "okd/distill/losses.hpp"
#include "okd/errors.hpp"

namespace okd::distill {

namespace {

constexpr size_t kEmbedChunk = 256;

std::vector<sim::Vec2> positions_of(const sim::Dataset& ds) {
  std::vector<sim::Vec2> out;
  out.reserve(ds.size());
  for (const auto& r : ds.records) out.push_back(r.pose.position());
  return out;
}

void require_finite(double v, const char* what, std::int64_t step) {
  if (!std::isfinite(v)) {
    throw NonFiniteError(std::string(what) + " became non-finite at step " + std::to_string(step));
  }
}

}  // namespace

void validate(const TrainConfig& cfg) {
  if (!(cfg.tau > 0.0)) throw ConfigError("tau must be > 0");
  if (!(cfg.lambda0 >= 0.0)) throw ConfigError("lambda0 must be >= 0");
  if (!(cfg.lambda1_start >= 0.0)) throw ConfigError("lambda1_start must be >= 0");
  if (!(cfg.lambda1_end >= 0.0)) throw ConfigError("lambda1_end must be >= 0");
  if (!(cfg.delta_min >= 0.0)) throw ConfigError("delta_min must be >= 0");
  if (!(cfg.lr_encoder > 0.0)) throw ConfigError("lr_encoder must be > 0");
  if (!(cfg.lr_action > 0.0)) throw ConfigError("lr_action must be > 0");
  if (cfg.teacher_batch < 1) throw ConfigError("teacher_batch must be >= 1");
  if (cfg.student_batch < 2) throw ConfigError("student_batch must be >= 2");
  if (cfg.teacher_epochs < 0 || cfg.student_epochs < 0) throw ConfigError("epochs must be >= 0");
  if (cfg.dagger_iterations < 0 || cfg.dagger_episodes < 0) {
    throw ConfigError("dagger_iterations and dagger_episodes must be >= 0");
  }
  if (!(cfg.dagger_beta >= 0.0 && cfg.dagger_beta <= 1.0)) {
    throw ConfigError("dagger_beta must lie in [0, 1]");
  }
}

double lambda1_schedule(int epoch, int total_epochs, const TrainConfig& cfg) {
  if (total_epochs < 1 || epoch < 0 || epoch >= total_epochs) {
    throw RangeError("epoch " + std::to_string(epoch) + " outside [0, " +
                     std::to_string(total_epochs) + ")");
  }
  if (total_epochs == 1) return cfg.lambda1_start;
  const double f = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  return cfg.lambda1_start * (1.0 - f) + cfg.lambda1_end * f;
}

std::vector<size_t> batch_sample_spaced(std::span<const sim::Vec2> positions,
                                        std::span<const std::uint64_t> groups, size_t n,
                                        double delta_min, std::uint64_t seed,
                                        int attempt_budget) {
  if (!groups.empty() && groups.size() != positions.size()) {
    throw ShapeError("batch sampling: one group key per position required");
  }
  auto dist = [&](size_t i, size_t j) -> double {
    if (!groups.empty() && groups[i] != groups[j]) return std::numeric_limits<double>::infinity();
    return (positions[i] - positions[j]).norm();
  };
  if (positions.empty()) throw SpacingInfeasibleError("cannot sample a batch from an empty dataset");
  if (n == 0) return {};
  if (n > positions.size()) {
    throw SpacingInfeasibleError("batch of " + std::to_string(n) + " from only " +
                                 std::to_string(positions.size()) + " samples");
  }
  std::mt19937_64 rng(seed);
  std::vector<size_t> order(positions.size());
  std::iota(order.begin(), order.end(), size_t{0});
  std::vector<size_t> chosen;
  chosen.reserve(n);
  auto far_enough = [&](size_t i) {
    for (size_t c : chosen) {
      if (dist(i, c) < delta_min) return false;
    }
    return true;
  };
  for (int attempt = 0; attempt < attempt_budget; ++attempt) {
    std::shuffle(order.begin(), order.end(), rng);
    chosen.clear();
    for (size_t i : order) {
      if (far_enough(i)) chosen.push_back(i);
      if (chosen.size() == n) return chosen;
    }
  }

  // Greedy farthest-point selection from a random first sample.
  chosen.assign(1, std::uniform_int_distribution<size_t>(0, positions.size() - 1)(rng));
  std::vector<double> nearest(positions.size());
  for (size_t i = 0; i < positions.size(); ++i) {
    nearest[i] = dist(i, chosen[0]);
  }
  nearest[chosen[0]] = -1.0;
  while (chosen.size() < n) {
    const size_t best = static_cast<size_t>(
        std::distance(nearest.begin(), std::max_element(nearest.begin(), nearest.end())));
    if (nearest[best] < delta_min) {
      throw SpacingInfeasibleError("only " + std::to_string(chosen.size()) +
                                   " samples are pairwise at least " + std::to_string(delta_min) +
                                   " m apart; " + std::to_string(n) + " requested");
    }
    chosen.push_back(best);
    for (size_t i = 0; i < positions.size(); ++i) {
      if (nearest[i] >= 0.0) nearest[i] = std::min(nearest[i], dist(i, best));
    }
    nearest[best] = -1.0;
  }
  return chosen;
}

std::vector<size_t> batch_sample_spaced(const sim::Dataset& ds, size_t n, double delta_min,
                                        std::uint64_t seed, int attempt_budget) {
  const auto pos = positions_of(ds);
  return batch_sample_spaced(pos, {}, n, delta_min, seed, attempt_budget);
}

LayoutMap layout_map(const sim::SceneSuite& suite) {
  LayoutMap m;
  for (const auto& s : suite.scenes) m[s.scene_id] = s.layout_seed;
  return m;
}

// ---------------------------------------------------------------- batches

Tensor depth_batch(const sim::Dataset& ds, std::span<const size_t> idx) {
  const size_t C = ds.camera_count, W = ds.rays_per_camera;
  Tensor out({idx.size(), C, W});
  for (size_t b = 0; b < idx.size(); ++b) {
    const auto& d = ds.records.at(idx[b]).depth;
    if (d.size() != C * W) throw ModalityError("record " + std::to_string(idx[b]) + " has no omni depth");
    std::copy(d.begin(), d.end(), out.data() + b * C * W);
  }
  return out;
}

Tensor goal_batch(const sim::Dataset& ds, std::span<const size_t> idx) {
  Tensor out({idx.size(), 2});
  for (size_t b = 0; b < idx.size(); ++b) {
    const auto& g = ds.records.at(idx[b]).goal_local;
    out[b * 2] = g.x;
    out[b * 2 + 1] = g.y;
  }
  return out;
}

Tensor label_batch(const sim::Dataset& ds, std::span<const size_t> idx) {
  Tensor out({idx.size(), 3});
  for (size_t b = 0; b < idx.size(); ++b) {
    const auto& a = ds.records.at(idx[b]).expert_action;
    out[b * 3] = a.vx;
    out[b * 3 + 1] = a.vy;
    out[b * 3 + 2] = a.omega;
  }
  return out;
}

Tensor rgb_window_batch(const sim::Dataset& ds, std::span<const size_t> idx, int length) {
  const size_t W = ds.rays_per_camera;
  const auto L = static_cast<size_t>(length);
  Tensor out({idx.size(), L, 3, W});
  for (size_t b = 0; b < idx.size(); ++b) {
    const auto win = ds.window(idx[b], length);
    for (size_t t = 0; t < L; ++t) {
      const auto& rgb = ds.records[win[t]].rgb;
      if (rgb.size() < 3 * W) throw ModalityError("record " + std::to_string(win[t]) + " has no rgb");
      // Camera 0 occupies the first 3 * W entries.
      std::copy_n(rgb.begin(), 3 * W, out.data() + (b * L + t) * 3 * W);
    }
  }
  return out;
}

Tensor goal_window_batch(const sim::Dataset& ds, std::span<const size_t> idx, int length) {
  const auto L = static_cast<size_t>(length);
  Tensor out({idx.size(), L, 2});
  for (size_t b = 0; b < idx.size(); ++b) {
    const auto win = ds.window(idx[b], length);
    for (size_t t = 0; t < L; ++t) {
      out[(b * L + t) * 2] = ds.records[win[t]].goal_local.x;
      out[(b * L + t) * 2 + 1] = ds.records[win[t]].goal_local.y;
    }
  }
  return out;
}

void write_loss_csv(const LossTrace& trace, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << "step,epoch,L_act,L_con,lambda1,total\n";
  char buf[256];
  for (const auto& r : trace) {
    std::snprintf(buf, sizeof buf, "%lld,%d,%.17g,%.17g,%.17g,%.17g\n",
                  static_cast<long long>(r.step), r.epoch, r.l_act, r.l_con, r.lambda1, r.total);
    os << buf;
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

// ---------------------------------------------------------------- losses

BatchLoss teacher_batch_loss(TeacherNet& net, const Tensor& depth, const Tensor& goal,
                             const Tensor& labels, bool accumulate) {
  TeacherNet::Cache cache;
  const NetOutput out = net.forward(depth, goal, accumulate ? &cache : nullptr);
  Tensor g;
  BatchLoss loss;
  loss.l_act = action_loss(out.action, labels, accumulate ? &g : nullptr);
  loss.total = loss.l_act;
  if (accumulate) net.backward(cache, {}, g);
  return loss;
}

BatchLoss student_batch_loss(StudentNet& net, const Tensor& rgb, const Tensor& goal,
                             const Tensor& labels, const Tensor* z1, double lambda0,
                             double lambda1, double tau, bool accumulate) {
  StudentNet::Cache cache;
  const NetOutput out = net.forward(rgb, goal, accumulate ? &cache : nullptr);
  BatchLoss loss;
  Tensor g_act, g_z;
  loss.l_act = action_loss(out.action, labels, accumulate ? &g_act : nullptr);
  const bool con_grad = accumulate && lambda1 != 0.0;
  if (z1) loss.l_con = infonce_loss(*z1, out.z, tau, nullptr, con_grad ? &g_z : nullptr);
  loss.total = lambda0 * loss.l_act + lambda1 * loss.l_con;
  if (accumulate) {
    for (auto& v : g_act.values()) v *= lambda0;
    for (auto& v : g_z.values()) v *= lambda1;
    net.backward(cache, g_z, g_act);
  }
  return loss;
}

// ---------------------------------------------------------------- loops

LossTrace train_teacher(TeacherNet& net, const sim::Dataset& ds, const TrainConfig& cfg,
                        const EpochHook& hook) {
  validate(cfg);
  if (ds.empty()) throw ConfigError("teacher training needs a non-empty dataset");
  auto params = net.parameters();
  nn::Adam adam(params, {cfg.lr_encoder, cfg.lr_action});
  std::mt19937_64 rng(sim::mix_seed(cfg.seed, 0x7eac4e5));
  std::vector<size_t> order(ds.size());
  std::iota(order.begin(), order.end(), size_t{0});

  LossTrace trace;
  std::int64_t step = 0;
  for (int epoch = 0; epoch < cfg.teacher_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (size_t start = 0; start < order.size(); start += cfg.teacher_batch) {
      const std::span<const size_t> idx(order.data() + start,
                                        std::min(cfg.teacher_batch, order.size() - start));
      nn::zero_grads(params);
      const BatchLoss l = teacher_batch_loss(net, depth_batch(ds, idx), goal_batch(ds, idx),
                                             label_batch(ds, idx), true);
      require_finite(l.total, "teacher loss", step);
      adam.step();
      trace.push_back({step++, epoch, l.l_act, 0.0, 0.0, l.total});
    }
    if (hook) hook(epoch);
  }
  return trace;
}

Tensor teacher_embeddings(const TeacherNet& teacher, const sim::Dataset& ds) {
  const size_t E = teacher.config().embed;
  Tensor out({ds.size(), E});
  std::vector<size_t> idx;
  for (size_t start = 0; start < ds.size(); start += kEmbedChunk) {
    idx.resize(std::min(kEmbedChunk, ds.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const NetOutput o = teacher.forward(depth_batch(ds, idx), goal_batch(ds, idx));
    std::copy(o.z.storage().begin(), o.z.storage().end(), out.data() + start * E);
  }
  return out;
}

StudentTrainer::StudentTrainer(StudentNet& net, const TeacherNet* teacher, const TrainConfig& cfg,
                               bool with_distillation)
    : net_(net),
      teacher_(teacher),
      cfg_(cfg),
      distill_(with_distillation),
      params_(net.parameters()),
      adam_(params_, {cfg.lr_encoder, cfg.lr_action}) {
  validate(cfg_);
  if (distill_ && !teacher_) throw ConfigError("distillation requires a teacher");
  if (teacher_ && teacher_->config().embed != net_.config().embed) {
    throw ConfigError("teacher embed width " + std::to_string(teacher_->config().embed) +
                      " differs from student embed width " + std::to_string(net_.config().embed));
  }
}

void StudentTrainer::train(const sim::Dataset& ds, int epochs, int total_epochs,
                           const EpochHook& hook) {
  if (ds.size() < 2) throw BatchTooSmallError("student training needs at least 2 records");
  const Tensor z1_all = teacher_ ? teacher_embeddings(*teacher_, ds) : Tensor();
  const auto pos = positions_of(ds);
  std::vector<std::uint64_t> groups;
  if (!layouts_.empty()) {
    groups.reserve(ds.size());
    for (const auto& r : ds.records) {
      const auto it = layouts_.find(r.scene_id);
      if (it == layouts_.end()) throw ConfigError("scene " + std::to_string(r.scene_id) + " has no layout");
      groups.push_back(it->second);
    }
  }
  const size_t E = net_.config().embed;
  const int L = net_.config().seq_len;
  const size_t batch = std::min(cfg_.student_batch, ds.size());
  const size_t steps_per_epoch = (ds.size() + batch - 1) / batch;

  for (int e = 0; e < epochs; ++e, ++epoch_) {
    const double lambda1 = distill_ ? lambda1_schedule(epoch_, total_epochs, cfg_) : 0.0;
    for (size_t s = 0; s < steps_per_epoch; ++s) {
      const auto idx = batch_sample_spaced(pos, groups, batch, cfg_.delta_min,
                                           sim::mix_seed(cfg_.seed, static_cast<std::uint64_t>(step_)));
      Tensor z1;
      if (teacher_) {
        z1 = Tensor({idx.size(), E});
        for (size_t b = 0; b < idx.size(); ++b) {
          std::copy_n(z1_all.data() + idx[b] * E, E, z1.data() + b * E);
        }
      }
      nn::zero_grads(params_);
      const BatchLoss l = student_batch_loss(net_, rgb_window_batch(ds, idx, L),
                                             goal_window_batch(ds, idx, L), label_batch(ds, idx),
                                             teacher_ ? &z1 : nullptr, cfg_.lambda0, lambda1,
                                             cfg_.tau, true);
      require_finite(l.total, "student loss", step_);
      adam_.step();
      trace_.push_back({step_++, epoch_, l.l_act, l.l_con, lambda1, l.total});
    }
    if (hook) hook(epoch_);
  }
}

LossTrace train_student(StudentNet& net, const TeacherNet* teacher, const sim::Dataset& ds,
                        const TrainConfig& cfg, bool with_distillation, const EpochHook& hook) {
  StudentTrainer trainer(net, teacher, cfg, with_distillation);
  trainer.train(ds, cfg.student_epochs, cfg.student_epochs, hook);
  return trainer.trace();
}

}  // namespace okd::distill
