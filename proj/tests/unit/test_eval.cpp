#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "okd/distill/losses.hpp"
#include "okd/distill/nets.hpp"
#include "okd/distill/train.hpp"
#include "okd/errors.hpp"
#include "okd/eval/eval.hpp"
#include "okd/expert/expert.hpp"
#include "okd/sim/suite.hpp"
#include "okd/sim/scene.hpp"
#include "okd/sim/world.hpp"

using namespace okd;
using namespace okd::eval;
namespace fs = std::filesystem;

namespace {

sim::SceneSuite suite_of(int layouts, int skins, std::uint64_t seed, bool empty = false) {
  sim::SuiteSpec spec;
  spec.seed = seed;
  spec.layouts = layouts;
  spec.skins_per_layout = skins;
  spec.obstacle_free = empty;
  return sim::make_suite(spec);
}

sim::Dataset expert_data(size_t tuples, std::uint64_t seed = 2, int layouts = 2) {
  const auto suite = suite_of(layouts, 1, seed);
  expert::ExpertPolicy ex;
  sim::ExpertPassthroughPolicy follow;
  sim::CollectOptions co;
  co.episodes = 1000;
  co.max_tuples = tuples;
  co.seed = seed;
  return sim::collect_episodes(follow, ex, suite, co);
}

fs::path temp_file(const char* name) {
  const auto dir = fs::temp_directory_path() / "okd_unit";
  fs::create_directories(dir);
  return dir / name;
}

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream is(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(is, line);) out.push_back(line);
  return out;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  return out;
}

double mean(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double std_error(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

}  // namespace

TEST_SUITE("action error") {
  TEST_CASE("the expert labels themselves score zero") {
    const auto ds = expert_data(200);
    FunctionOffline labels([](const sim::Dataset& d, size_t i) { return d.records[i].expert_action; });
    CHECK(action_error(labels, ds) == 0.0);
  }

  TEST_CASE("a constant offset of 0.1 scores 0.1") {
    const auto ds = expert_data(200);
    FunctionOffline off([](const sim::Dataset& d, size_t i) {
      auto a = d.records[i].expert_action;
      a.vx += 0.1;
      return a;
    });
    CHECK(action_error(off, ds) == doctest::Approx(0.1).epsilon(1e-12));
  }

  TEST_CASE("uniform noise matches a Monte Carlo estimate of the noise norm") {
    const auto ds = expert_data(3000);
    const double eps = 0.2;
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> u(-eps, eps);
    std::vector<double> norms;
    FunctionOffline noisy([&](const sim::Dataset& d, size_t i) {
      auto a = d.records[i].expert_action;
      const double n[3] = {u(rng), u(rng), u(rng)};
      norms.push_back(std::sqrt(n[0] * n[0] + n[1] * n[1] + n[2] * n[2]));
      a.vx += n[0];
      a.vy += n[1];
      a.omega += n[2];
      return a;
    });
    const double ae = action_error(noisy, ds);
    REQUIRE(norms.size() == ds.size());

    std::mt19937_64 mc_rng(97);
    std::vector<double> mc(200000);
    for (auto& v : mc) {
      const double a = u(mc_rng), b = u(mc_rng), c = u(mc_rng);
      v = std::sqrt(a * a + b * b + c * c);
    }
    const double se = std::sqrt(std::pow(std_error(norms), 2) + std::pow(std_error(mc), 2));
    CHECK(std::abs(ae - mean(mc)) < 3.0 * se);
  }

  TEST_CASE("a dataset without the needed view is a modality error") {
    auto ds = expert_data(20);
    ds.records[5].rgb.clear();
    distill::StudentNet student(distill::NetConfig{}, 1);
    CHECK_THROWS_AS(action_error(StudentOffline(student), ds), ModalityError);
    ds = expert_data(20);
    ds.records[3].depth.resize(64);
    distill::TeacherNet teacher(distill::NetConfig{}, 1);
    CHECK_THROWS_AS(action_error(TeacherOffline(teacher), ds), ModalityError);
  }

  TEST_CASE("offline network policies agree with their forward pass") {
    const auto ds = expert_data(40);
    distill::TeacherNet teacher(distill::NetConfig{}, 4);
    double total = 0;
    for (size_t i = 0; i < ds.size(); ++i) {
      const auto& r = ds.records[i];
      const auto out = distill::teacher_forward(
          teacher, std::vector<double>(r.depth.begin(), r.depth.end()), r.goal_local);
      total += std::sqrt(std::pow(out.action.vx - r.expert_action.vx, 2) +
                         std::pow(out.action.vy - r.expert_action.vy, 2) +
                         std::pow(out.action.omega - r.expert_action.omega, 2));
    }
    CHECK(action_error(TeacherOffline(teacher), ds) ==
          doctest::Approx(total / static_cast<double>(ds.size())).epsilon(1e-12));
  }

  TEST_CASE("teacher action error on its training set falls at every epoch") {
    sim::SuiteSpec spec;
    spec.seed = 8;
    const auto suite = sim::make_suite(spec);
    expert::ExpertPolicy ex;
    sim::ExpertPassthroughPolicy follow;
    sim::CollectOptions co;
    co.seed = 8;
    co.episodes = 100000;
    co.max_tuples = 5000;
    const auto ds = sim::collect_episodes(follow, ex, suite, co);
    REQUIRE(ds.size() == 5000);

    distill::TeacherNet net(distill::NetConfig{}, 9);
    distill::TrainConfig cfg;
    std::vector<double> ae{action_error(TeacherOffline(net), ds)};
    distill::train_teacher(net, ds, cfg, [&](int) { ae.push_back(action_error(TeacherOffline(net), ds)); });
    REQUIRE(ae.size() == static_cast<size_t>(cfg.teacher_epochs) + 1);
    for (size_t e = 1; e < ae.size(); ++e) {
      CAPTURE(e);
      CHECK(ae[e] < ae[e - 1]);
    }
  }
}

TEST_SUITE("benchmark") {
  TEST_CASE("a zero-velocity policy never succeeds and never moves") {
    sim::ConstantPolicy zero;
    expert::ExpertPolicy ex;
    BenchmarkOptions bo;
    bo.episodes_per_scene = 3;
    bo.sim.horizon = 60;
    const auto r = run_benchmark(zero, ex, suite_of(2, 1, 4), bo);
    CHECK(r.episodes == 6);
    CHECK(r.sr == 0.0);
    CHECK(r.md_mean == 0.0);
    CHECK(r.md_std == 0.0);
  }

  TEST_CASE("the expert succeeds everywhere on obstacle-free scenes") {
    sim::ExpertPassthroughPolicy follow;
    expert::ExpertPolicy ex;
    BenchmarkOptions bo;
    bo.episodes_per_scene = 5;
    bo.seed = 6;
    const auto r = run_benchmark(follow, ex, suite_of(4, 1, 5, true), bo);
    CHECK(r.episodes == 20);
    CHECK(r.sr == 1.0);
  }

  TEST_CASE("the same seed gives identical reports") {
    sim::ExpertPassthroughPolicy follow;
    expert::ExpertPolicy ex;
    BenchmarkOptions bo;
    bo.episodes_per_scene = 3;
    bo.seed = 7;
    const auto suite = suite_of(2, 1, 7);
    const auto a = run_benchmark(follow, ex, suite, bo);
    const auto b = run_benchmark(follow, ex, suite, bo);
    CHECK(summary_text(a) == summary_text(b));
    REQUIRE(a.per_episode.size() == b.per_episode.size());
    for (size_t i = 0; i < a.per_episode.size(); ++i) {
      CHECK(a.per_episode[i].moving_distance == b.per_episode[i].moving_distance);
      CHECK(a.per_episode[i].steps == b.per_episode[i].steps);
    }
    bo.seed = 8;
    CHECK(run_benchmark(follow, ex, suite, bo).md_mean != a.md_mean);
  }

  TEST_CASE("SR and MD agree with a recomputation from stored tuples") {
    const auto suite = suite_of(3, 1, 9);
    sim::SimConfig sc;
    expert::ExpertPolicy ex;
    sim::ExpertPassthroughPolicy follow;
    std::vector<EpisodeSummary> eps;
    int successes = 0;
    std::vector<double> md;
    for (size_t e = 0; e < 12; ++e) {
      const auto& scene = suite.scenes[e % suite.size()];
      const auto layout = sim::resample_start_goal(scene.layout, 100 + e, {});
      const auto rec = sim::rollout(follow, layout, scene.skin, ex, sc, {});
      // Path length from the stored poses plus the final move.
      double d = 0;
      for (size_t t = 1; t < rec.tuples.size(); ++t) {
        d += (rec.tuples[t].pose.position() - rec.tuples[t - 1].pose.position()).norm();
      }
      if (!rec.tuples.empty()) d += (rec.final_pose.position() - rec.tuples.back().pose.position()).norm();
      const double goal_dist = (rec.final_pose.position() - layout.goal.point).norm();
      CHECK(rec.moving_distance == doctest::Approx(d).epsilon(1e-9));
      CHECK((rec.outcome == sim::Outcome::Success) == (goal_dist <= sc.success_radius));
      successes += goal_dist <= sc.success_radius;
      md.push_back(d);
      eps.push_back({e, scene.scene_id, rec.outcome, rec.moving_distance, rec.final_goal_distance,
                     rec.tuples.size(), rec.total_reward});
    }
    const auto r = summarise(eps);
    const double m = mean(md);
    double var = 0;
    for (double v : md) var += (v - m) * (v - m);
    CHECK(r.sr == doctest::Approx(successes / 12.0));
    CHECK(r.md_mean == doctest::Approx(m).epsilon(1e-9));
    CHECK(r.md_std == doctest::Approx(std::sqrt(var / 12.0)).epsilon(1e-9));
  }

  TEST_CASE("empty suites and bad episode counts are rejected") {
    sim::ConstantPolicy zero;
    expert::ExpertPolicy ex;
    CHECK_THROWS_AS(run_benchmark(zero, ex, sim::SceneSuite{}, {}), RangeError);
    BenchmarkOptions bo;
    bo.episodes_per_scene = 0;
    CHECK_THROWS_AS(run_benchmark(zero, ex, suite_of(1, 1, 1), bo), RangeError);
  }

  TEST_CASE("policy faults carry the episode index") {
    sim::ConstantPolicy bad({std::nan(""), 0, 0});
    expert::ExpertPolicy ex;
    BenchmarkOptions bo;
    bo.episodes_per_scene = 1;
    try {
      run_benchmark(bad, ex, suite_of(1, 1, 1), bo);
      FAIL("expected a policy fault");
    } catch (const PolicyFaultError& e) {
      CHECK(std::string(e.what()).find("episode 0") != std::string::npos);
    }
  }

  TEST_CASE("episode CSV and summary") {
    std::vector<EpisodeSummary> eps{{0, 3, sim::Outcome::Success, 1.0, 0.1, 40, 2.0},
                                    {1, 3, sim::Outcome::Collision, 3.0, 1.5, 12, -1.0}};
    const auto r = summarise(eps);
    CHECK(r.sr == 0.5);
    CHECK(r.md_mean == 2.0);
    CHECK(r.md_std == 1.0);
    const auto path = temp_file("episodes.csv");
    write_episode_csv(r, path);
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "episode,scene_id,outcome,moving_distance,final_goal_distance,steps,total_reward");
    CHECK(split(lines[2])[2] == "collision");
    const auto text = summary_text(r);
    CHECK(text.find("sr: 0.5\n") != std::string::npos);
    CHECK(text.find("collision: 1\n") != std::string::npos);
  }
}

TEST_SUITE("embedding similarity") {
  struct Fixture {
    sim::SuiteScene scene;
    std::vector<sim::AppearanceSkin> skins;
    std::vector<Probe> probes;
    sim::SimConfig sc;
    Fixture() {
      const auto suite = suite_of(1, 4, 12);
      scene = suite.scenes[0];
      for (const auto& s : suite.scenes) skins.push_back(s.skin);
      expert::ExpertPolicy ex;
      probes = expert_probes(scene.layout, skins[0], ex, sc, 5, 5);
    }
  };

  TEST_CASE("depth embeddings are identical across skins") {
    Fixture f;
    REQUIRE(f.probes.size() > 3);
    distill::TeacherNet teacher(distill::NetConfig{}, 3);
    const auto r = embedding_similarity(teacher_embedder(teacher, f.sc), f.scene.layout, f.skins, f.probes);
    CHECK(r.mu == 1.0);
    for (double v : r.per_pose) CHECK(v == 1.0);
    CHECK(r.pairs == f.probes.size() * 6);
  }

  TEST_CASE("a constant encoder scores 1") {
    Fixture f;
    const EmbedFn constant = [](const sim::SceneLayout&, const sim::AppearanceSkin&, const Probe&) {
      return std::vector<double>{0.3, -1.0, 2.0};
    };
    CHECK(embedding_similarity(constant, f.scene.layout, f.skins, f.probes).mu == doctest::Approx(1.0));
  }

  TEST_CASE("symmetric in skin order and invariant to probe order") {
    Fixture f;
    distill::StudentNet student(distill::NetConfig{}, 5);
    const auto embed = student_embedder(student, f.sc);
    const auto base = embedding_similarity(embed, f.scene.layout, f.skins, f.probes);
    CHECK(base.mu >= -1.0);
    CHECK(base.mu <= 1.0);

    auto skins = f.skins;
    std::reverse(skins.begin(), skins.end());
    const auto rev = embedding_similarity(embed, f.scene.layout, skins, f.probes);
    CHECK(rev.mu == doctest::Approx(base.mu).epsilon(1e-12));
    const size_t S = skins.size();
    for (size_t a = 0; a < S; ++a) {
      for (size_t b = 0; b < S; ++b) {
        CHECK(rev.pair_matrix[S - 1 - a][S - 1 - b] == doctest::Approx(base.pair_matrix[a][b]).epsilon(1e-12));
        CHECK(base.pair_matrix[a][b] == base.pair_matrix[b][a]);
      }
    }

    auto probes = f.probes;
    std::reverse(probes.begin(), probes.end());
    const auto shuffled = embedding_similarity(embed, f.scene.layout, f.skins, probes);
    CHECK(shuffled.mu == doctest::Approx(base.mu).epsilon(1e-12));
    CHECK(shuffled.per_pose.front() == base.per_pose.back());
  }

  TEST_CASE("random rgb encoders match an independent Monte Carlo estimate") {
    Fixture f;
    f.probes.resize(std::min<size_t>(f.probes.size(), 8));
    distill::NetConfig nc;
    nc.embed = 128;
    std::vector<double> by_function, by_oracle;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      distill::StudentNet net(nc, seed);
      by_function.push_back(
          embedding_similarity(student_embedder(net, f.sc), f.scene.layout, f.skins, f.probes).mu);
    }
    // Oracle: other random nets, frames rendered and compared here.
    for (std::uint64_t seed = 100; seed < 120; ++seed) {
      distill::StudentNet net(nc, seed);
      double sum = 0;
      int n = 0;
      for (const auto& p : f.probes) {
        std::vector<std::vector<double>> z;
        for (const auto& skin : f.skins) {
          std::vector<std::vector<double>> frames;
          for (const auto& pose : p.poses) {
            const auto obs = sim::raycast(f.scene.layout, skin, pose, f.sc.rig, f.sc.d_max, f.sc.d_shade);
            std::vector<double> cam0(obs.rgb.begin(), obs.rgb.begin() + 3 * obs.rays);
            for (auto& v : cam0) v = static_cast<float>(v);
            frames.push_back(std::move(cam0));
          }
          z.push_back(distill::student_forward(net, frames, p.goals).z);
        }
        for (size_t a = 0; a < z.size(); ++a) {
          for (size_t b = a + 1; b < z.size(); ++b) {
            double dot = 0, na = 0, nb = 0;
            for (size_t k = 0; k < z[a].size(); ++k) {
              dot += z[a][k] * z[b][k];
              na += z[a][k] * z[a][k];
              nb += z[b][k] * z[b][k];
            }
            sum += dot / std::sqrt(na * nb);
            ++n;
          }
        }
      }
      by_oracle.push_back(sum / n);
    }
    const double se = std::sqrt(std::pow(std_error(by_function), 2) + std::pow(std_error(by_oracle), 2));
    CAPTURE(mean(by_function));
    CAPTURE(mean(by_oracle));
    CHECK(std::abs(mean(by_function) - mean(by_oracle)) < 3.0 * se);
  }

  TEST_CASE("fewer than two skins, no probes and zero embeddings are errors") {
    Fixture f;
    distill::TeacherNet teacher(distill::NetConfig{}, 3);
    const auto embed = teacher_embedder(teacher, f.sc);
    CHECK_THROWS_AS(embedding_similarity(embed, f.scene.layout, {f.skins[0]}, f.probes), RangeError);
    CHECK_THROWS_AS(embedding_similarity(embed, f.scene.layout, f.skins, {}), RangeError);
    const EmbedFn zero = [](const sim::SceneLayout&, const sim::AppearanceSkin&, const Probe&) {
      return std::vector<double>(4, 0.0);
    };
    try {
      embedding_similarity(zero, f.scene.layout, f.skins, f.probes);
      FAIL("expected a zero-norm error");
    } catch (const ZeroNormError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("probe 0") != std::string::npos);
      CHECK(msg.find("skin 0") != std::string::npos);
    }
  }

  TEST_CASE("probes are expert poses every stride steps") {
    Fixture f;
    expert::ExpertPolicy ex;
    CHECK_THROWS_AS(expert_probes(f.scene.layout, f.skins[0], ex, f.sc, 0), RangeError);
    for (const auto& p : f.probes) {
      CHECK(p.poses.size() == 5);
      CHECK(p.goals.size() == 5);
      for (const auto& pose : p.poses) CHECK(f.scene.layout.obstacle_clearance(pose.position()) > f.sc.robot_radius);
    }
    // The first probe pads with the start pose.
    CHECK(f.probes[0].poses[0] == f.probes[0].poses[4]);
  }
}

TEST_SUITE("embedding export") {
  TEST_CASE("empty dataset writes only the header") {
    distill::TeacherNet teacher(distill::NetConfig{}, 1);
    const auto path = temp_file("empty_embed.csv");
    CHECK(export_embeddings(teacher_row_embedder(teacher), sim::Dataset{}, path) == 0);
    CHECK(read_lines(path) == std::vector<std::string>{"scene_id,step,x,y,psi"});
  }

  TEST_CASE("one row per tuple with 5 + E columns that reload exactly") {
    const auto ds = expert_data(30);
    distill::StudentNet student(distill::NetConfig{}, 2);
    const auto embed = student_row_embedder(student);
    const auto path = temp_file("embed.csv");
    CHECK(export_embeddings(embed, ds, path) == ds.size());
    const auto lines = read_lines(path);
    REQUIRE(lines.size() == ds.size() + 1);
    CHECK(split(lines[0]).size() == 5 + 64);
    CHECK(split(lines[0])[5] == "e0");
    for (size_t i = 0; i < ds.size(); ++i) {
      const auto f = split(lines[i + 1]);
      REQUIRE(f.size() == 5 + 64);
      CHECK(std::stoul(f[0]) == ds.records[i].scene_id);
      CHECK(std::stoul(f[1]) == ds.records[i].step);
      CHECK(std::stod(f[2]) == ds.records[i].pose.x);
      const auto z = embed(ds, i);
      for (size_t k = 0; k < z.size(); ++k) CHECK(std::stod(f[5 + k]) == z[k]);
    }
  }

  TEST_CASE("unwritable path is an I/O error") {
    distill::TeacherNet teacher(distill::NetConfig{}, 1);
    CHECK_THROWS_AS(export_embeddings(teacher_row_embedder(teacher), expert_data(3),
                                      "/nonexistent_dir/x/embed.csv"),
                    IoError);
  }

  TEST_CASE("similarity CSV has one row per probe") {
    SimilarityReport r;
    r.per_pose = {1.0, 0.25};
    const auto path = temp_file("sim.csv");
    write_similarity_csv(r, path);
    CHECK(read_lines(path) == std::vector<std::string>{"probe,similarity", "0,1", "1,0.25"});
  }
}
