#include <doctest.h>

#include <random>

#include "okd/errors.hpp"
#include "okd/expert/expert.hpp"
#include "okd/sim/suite.hpp"
#include "okd/sim/world.hpp"

using namespace okd;
using namespace okd::expert;
using okd::sim::Vec2;

namespace {

// Potential whose negative gradient is the expert's unclamped velocity field.
double potential(Vec2 p, Vec2 goal, const std::vector<RelativeObstacle>& obs,
                 const ExpertConfig& cfg) {
  double u = 0.5 * cfg.k_att * ((p - goal).dot(p - goal));
  for (const auto& o : obs) {
    const double s = (p - o.offset).norm() - o.radius;
    if (s < cfg.rep_range) u += 0.5 * cfg.k_rep * std::pow(1.0 / s - 1.0 / cfg.rep_range, 2);
  }
  return u;
}

double success_rate(const ExpertConfig& cfg, double density, int episodes, std::uint64_t seed) {
  sim::SuiteSpec spec;
  spec.seed = seed;
  spec.layouts = episodes;
  spec.density = density;
  const auto suite = sim::make_suite(spec);
  sim::SimConfig sc;
  ExpertPolicy ex(cfg);
  sim::ExpertPassthroughPolicy follow;
  int ok = 0;
  for (int e = 0; e < episodes; ++e) {
    const auto& scene = suite.scenes[static_cast<size_t>(e)];
    sim::RolloutOptions ro;
    ro.horizon = sc.horizon;
    ok += sim::rollout(follow, scene.layout, scene.skin, ex, sc, ro).outcome == sim::Outcome::Success;
  }
  return static_cast<double>(ok) / episodes;
}

}  // namespace

TEST_CASE("free space: velocity points at the goal with capped speed") {
  ExpertConfig cfg;
  const auto a = expert_action({}, {1, 0}, cfg);
  CHECK(a.vx == doctest::Approx(std::min(cfg.k_att, cfg.v_max)));
  CHECK(a.vy == 0.0);
  CHECK(a.omega == 0.0);

  cfg.k_att = 0.5;
  CHECK(expert_action({}, {1, 0}, cfg).vx == doctest::Approx(0.5));
}

TEST_CASE("goal at the robot gives a zero action") {
  const auto a = expert_action({}, {0, 0}, ExpertConfig{});
  CHECK(a == sim::Action{0, 0, 0});
}

TEST_CASE("an obstacle on the goal segment deflects sideways") {
  ExpertConfig cfg;
  // Slightly off the axis so the push has a definite side.
  const std::vector<RelativeObstacle> obs{{{0.5, 0.02}, 0.2}};
  const Vec2 goal{2.0, 0.0};
  const auto a = expert_action(obs, goal, cfg);
  CHECK(std::abs(a.vy) > 1e-3);

  // Compare with the numerical negative gradient of the potential at the robot.
  const double h = 1e-6;
  const Vec2 grad{(potential({h, 0}, goal, obs, cfg) - potential({-h, 0}, goal, obs, cfg)) / (2 * h),
                  (potential({0, h}, goal, obs, cfg) - potential({0, -h}, goal, obs, cfg)) / (2 * h)};
  Vec2 v = grad * -1.0;
  if (v.norm() > cfg.v_max) v = v * (cfg.v_max / v.norm());
  CHECK(a.vx == doctest::Approx(v.x).epsilon(1e-5));
  CHECK(a.vy == doctest::Approx(v.y).epsilon(1e-5));
  CHECK(a.vy < 0.0);  // pushed away from the obstacle, which sits at +y
}

TEST_CASE("obstacles beyond the repulsion range have no effect") {
  ExpertConfig cfg;
  const std::vector<RelativeObstacle> far{{{0.0, 1.5}, 0.2}};
  CHECK(expert_action(far, {1, 0.3}, cfg) == expert_action({}, {1, 0.3}, cfg));
}

TEST_CASE("outputs respect the action limits even at contact") {
  ExpertConfig cfg;
  const std::vector<RelativeObstacle> touching{{{0.2, 0.0}, 0.2}};
  const auto a = expert_action(touching, {-1.0, -3.0}, cfg);
  CHECK(std::hypot(a.vx, a.vy) <= cfg.v_max + 1e-12);
  CHECK(std::abs(a.omega) <= cfg.omega_max);
  CHECK(a.finite());
}

TEST_CASE("invalid gains are rejected") {
  ExpertConfig cfg;
  cfg.k_rep = 0;
  CHECK_THROWS_AS(validate(cfg), ConfigError);
  cfg = {};
  cfg.rep_range = 0.1;
  CHECK_THROWS_AS(ExpertPolicy{cfg}, ConfigError);
}

TEST_CASE("relative obstacles are expressed in the robot frame") {
  auto l = sim::empty_scene({0, 0, 0}, {1, 1});
  l.obstacles.push_back({{0, 1}, 0.2, 0});
  const auto rel = relative_obstacles(l, {0, 0, std::numbers::pi / 2});
  REQUIRE(rel.size() == 1);
  CHECK(rel[0].offset.x == doctest::Approx(1.0));
  CHECK(rel[0].offset.y == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(relative_obstacles(l, {0, 0, 0}, true).size() == 5);
}

TEST_CASE("the expert reaches reachable goals in empty arenas") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.6, 1.6);
  sim::SimConfig sc;
  ExpertPolicy ex;
  sim::ExpertPassthroughPolicy follow;
  for (int i = 0; i < 30; ++i) {
    const auto l = sim::empty_scene({u(rng), u(rng), u(rng)}, {u(rng), u(rng)});
    const auto rec = sim::rollout(follow, l, {}, ex, sc, {});
    CHECK(rec.outcome == sim::Outcome::Success);
  }
}

TEST_CASE("gain tuning grid: the defaults are the best setting on dense scenes") {
  // The grid search that picked the default gains, kept small enough to run here.
  struct Cell {
    double k_rep, rep_range, sr;
  };
  std::vector<Cell> grid;
  for (double k_rep : {0.02, 0.04, 0.08}) {
    for (double rep_range : {0.5, 0.8}) {
      ExpertConfig cfg;
      cfg.k_rep = k_rep;
      cfg.rep_range = rep_range;
      grid.push_back({k_rep, rep_range, success_rate(cfg, 0.20, 30, 77)});
    }
  }
  double best = 0;
  for (const auto& c : grid) best = std::max(best, c.sr);
  const ExpertConfig def;
  const double def_sr = success_rate(def, 0.20, 30, 77);
  CHECK(def_sr == best);
  CHECK(def_sr >= 0.9);
  for (const auto& c : grid) {
    CAPTURE(c.k_rep);
    CAPTURE(c.rep_range);
    CHECK(c.sr <= def_sr);
  }
}
