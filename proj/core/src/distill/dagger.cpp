#include "okd/distill/dagger.hpp"

#include <cmath>

#include "okd/errors.hpp"

namespace okd::distill {

void StudentPolicy::reset() {
  frames_.clear();
  goals_.clear();
}

sim::Action StudentPolicy::act(const sim::StepInput& in) {
  const size_t L = static_cast<size_t>(net_.config().seq_len);
  const size_t W = static_cast<size_t>(in.obs.rays);
  std::vector<double> frame(3 * W);
  for (size_t i = 0; i < frame.size(); ++i) frame[i] = static_cast<float>(in.obs.rgb[i]);
  frames_.push_back(std::move(frame));
  goals_.push_back(in.goal_local);
  while (frames_.size() > L) {
    frames_.pop_front();
    goals_.pop_front();
  }
  while (frames_.size() < L) {
    frames_.push_front(frames_.front());
    goals_.push_front(goals_.front());
  }
  const std::vector<std::vector<double>> seq(frames_.begin(), frames_.end());
  const std::vector<sim::Vec2> gseq(goals_.begin(), goals_.end());
  return student_forward(net_, seq, gseq).action;
}

sim::Action TeacherPolicy::act(const sim::StepInput& in) {
  std::vector<double> depth(in.obs.depth.size());
  for (size_t i = 0; i < depth.size(); ++i) depth[i] = static_cast<float>(in.obs.depth[i]);
  return teacher_forward(net_, depth, in.goal_local).action;
}

MixturePolicy::MixturePolicy(sim::Policy& learner, double beta, std::uint64_t seed)
    : learner_(learner), beta_(beta), rng_(seed) {
  if (!(beta >= 0.0 && beta <= 1.0)) throw RangeError("beta must lie in [0, 1]");
}

sim::Action MixturePolicy::act(const sim::StepInput& in) {
  const sim::Action own = learner_.act(in);
  const double u = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
  return u < beta_ ? *in.expert_action : own;
}

sim::Dataset dagger_collect(const StudentNet& student, const sim::SceneSuite& suite, double beta,
                            int episodes, std::uint64_t seed, const DaggerOptions& opts) {
  StudentPolicy learner(student);
  MixturePolicy mix(learner, beta, sim::mix_seed(seed, 0xda66e7));
  expert::ExpertPolicy expert(opts.expert);
  sim::CollectOptions co;
  co.episodes = episodes;
  co.seed = seed;
  co.sim = opts.sim;
  co.gen = opts.gen;
  return sim::collect_episodes(mix, expert, suite, co);
}

DaggerResult train_student_dagger(StudentNet& net, const TeacherNet* teacher,
                                  const sim::Dataset& initial, const sim::SceneSuite& suite,
                                  const TrainConfig& cfg, bool with_distillation,
                                  const DaggerOptions& opts) {
  StudentTrainer trainer(net, teacher, cfg, with_distillation);
  trainer.set_layouts(layout_map(suite));
  DaggerResult res;
  res.aggregated = initial;
  res.sizes.push_back(initial.size());
  const int rounds = cfg.dagger_iterations + 1;
  const int total = cfg.student_epochs;
  for (int r = 0; r < rounds; ++r) {
    if (r > 0) {
      const double beta = std::pow(cfg.dagger_beta, r);
      res.aggregated.append(dagger_collect(net, suite, beta, cfg.dagger_episodes,
                                           sim::mix_seed(cfg.seed, 0xda0000 + static_cast<std::uint64_t>(r)),
                                           opts));
      res.sizes.push_back(res.aggregated.size());
    }
    // Earlier rounds take the remainder when epochs do not divide evenly.
    const int epochs = total / rounds + (r < total % rounds ? 1 : 0);
    if (epochs > 0) trainer.train(res.aggregated, epochs, total, opts.on_epoch);
  }
  res.trace = trainer.trace();
  return res;
}

}  // namespace okd::distill
