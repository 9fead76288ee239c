#include <benchmark/benchmark.h>

#include <random>

#include "okd/distill/losses.hpp"
#include "okd/distill/nets.hpp"
#include "okd/distill/train.hpp"
#include "okd/expert/expert.hpp"
#include "okd/sim/scene.hpp"
#include "okd/sim/suite.hpp"
#include "okd/sim/world.hpp"

using namespace okd;
using nn::Tensor;

namespace {

Tensor random_tensor(nn::Dims dims, std::mt19937_64& rng, double lo = -1, double hi = 1) {
  Tensor t(std::move(dims));
  std::uniform_real_distribution<double> u(lo, hi);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

void BM_Raycast(benchmark::State& state) {
  const auto layout = sim::generate_scene(3, 0.12, {});
  const auto skin = sim::generate_skin(3, 8);
  const sim::Pose pose = layout.start;
  for (auto _ : state) benchmark::DoNotOptimize(sim::raycast(layout, skin, pose, {}));
  state.SetItemsProcessed(state.iterations() * 256);
}
BENCHMARK(BM_Raycast);

void BM_ExpertEpisode(benchmark::State& state) {
  sim::SuiteSpec spec;
  spec.seed = 4;
  spec.layouts = 1;
  const auto suite = sim::make_suite(spec);
  expert::ExpertPolicy ex;
  sim::ExpertPassthroughPolicy follow;
  const auto& s = suite.scenes[0];
  for (auto _ : state) benchmark::DoNotOptimize(sim::rollout(follow, s.layout, s.skin, ex, {}, {}));
}
BENCHMARK(BM_ExpertEpisode)->Unit(benchmark::kMillisecond);

void BM_TeacherStep(benchmark::State& state) {
  const auto B = static_cast<size_t>(state.range(0));
  std::mt19937_64 rng(1);
  distill::TeacherNet net(distill::NetConfig{}, 1);
  const Tensor depth = random_tensor({B, 4, 64}, rng, 0.2, 6.0);
  const Tensor goal = random_tensor({B, 2}, rng);
  const Tensor labels = random_tensor({B, 3}, rng);
  for (auto _ : state) {
    net.zero_grad();
    benchmark::DoNotOptimize(distill::teacher_batch_loss(net, depth, goal, labels, true));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(B));
}
BENCHMARK(BM_TeacherStep)->Arg(64);

void BM_StudentStep(benchmark::State& state) {
  const auto B = static_cast<size_t>(state.range(0));
  const bool distill = state.range(1) != 0;
  std::mt19937_64 rng(2);
  distill::StudentNet net(distill::NetConfig{}, 2);
  const Tensor rgb = random_tensor({B, 5, 3, 64}, rng, 0.0, 1.0);
  const Tensor goal = random_tensor({B, 5, 2}, rng);
  const Tensor labels = random_tensor({B, 3}, rng);
  const Tensor z1 = random_tensor({B, 64}, rng);
  for (auto _ : state) {
    net.zero_grad();
    benchmark::DoNotOptimize(distill::student_batch_loss(net, rgb, goal, labels, distill ? &z1 : nullptr, 1.0,
                                                         distill ? 0.5 : 0.0, 0.1, true));
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(B));
}
BENCHMARK(BM_StudentStep)->Args({32, 0})->Args({32, 1});

void BM_InfoNce(benchmark::State& state) {
  const auto N = static_cast<size_t>(state.range(0));
  std::mt19937_64 rng(3);
  const Tensor z1 = random_tensor({N, 64}, rng), z2 = random_tensor({N, 64}, rng);
  Tensor g1, g2;
  for (auto _ : state) benchmark::DoNotOptimize(distill::infonce_loss(z1, z2, 0.1, &g1, &g2));
}
BENCHMARK(BM_InfoNce)->Arg(32)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
