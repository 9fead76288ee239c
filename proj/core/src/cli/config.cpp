#include "okd/cli/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>

#include "okd/errors.hpp"

namespace okd::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  T v{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw ConfigError("key '" + std::string(key) + "': cannot parse '" + std::string(text) + "'");
  }
  return v;
}

const char* goal_mode_name(sim::GoalMode m) {
  switch (m) {
    case sim::GoalMode::Static:
      return "static";
    case sim::GoalMode::Circular:
      return "circular";
    case sim::GoalMode::Mixed:
      return "mixed";
  }
  return "static";
}

struct Entry {
  ConfigKey key;
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, std::string_view)> set;
};

// Binds a key to a field reached through `ref`.
template <class Ref>
Entry field(const char* name, const char* doc, Ref ref) {
  using T = std::remove_reference_t<decltype(ref(std::declval<ExperimentConfig&>()))>;
  Entry e{{name, doc}, {}, {}};
  e.get = [ref](const ExperimentConfig& c) -> std::string {
    const T& v = ref(const_cast<ExperimentConfig&>(c));
    if constexpr (std::is_same_v<T, double>) {
      return format(v);
    } else if constexpr (std::is_same_v<T, bool>) {
      return v ? "true" : "false";
    } else if constexpr (std::is_same_v<T, std::string>) {
      return v;
    } else {
      return std::to_string(v);
    }
  };
  e.set = [ref, name](ExperimentConfig& c, std::string_view text) {
    T& v = ref(c);
    if constexpr (std::is_same_v<T, bool>) {
      if (text == "true" || text == "1") {
        v = true;
      } else if (text == "false" || text == "0") {
        v = false;
      } else {
        throw ConfigError("key '" + std::string(name) + "': expected true or false");
      }
    } else if constexpr (std::is_same_v<T, std::string>) {
      v = std::string(text);
    } else {
      v = parse_number<T>(name, text);
    }
  };
  return e;
}

#define OKD_FIELD(name, doc, expr) field(name, doc, [](ExperimentConfig& c) -> auto& { return expr; })

std::vector<Entry> make_entries() {
  std::vector<Entry> e = {
      OKD_FIELD("seed", "master seed; every other seed is derived from it", c.seed),
      OKD_FIELD("out_dir", "directory that receives every artifact", c.out_dir),
      // simulator
      OKD_FIELD("dt", "control period in seconds", c.sim.dt),
      OKD_FIELD("horizon", "episode length limit in steps", c.sim.horizon),
      OKD_FIELD("robot_radius", "robot disc radius in m", c.sim.robot_radius),
      OKD_FIELD("v_max", "linear speed limit per axis in m/s", c.sim.limits.v_max),
      OKD_FIELD("omega_max", "turn rate limit in rad/s", c.sim.limits.omega_max),
      OKD_FIELD("d_max", "depth clamp in m", c.sim.d_max),
      OKD_FIELD("d_shade", "distance scale of colour shading in m", c.sim.d_shade),
      OKD_FIELD("r_clear", "clearance of start and goal from obstacles in m", c.sim.r_clear),
      OKD_FIELD("success_radius", "goal distance that counts as success in m", c.sim.success_radius),
      OKD_FIELD("depth_noise", "relative depth noise sigma, 0 = off", c.sim.depth_noise),
      OKD_FIELD("rays_per_camera", "rays per camera (W)", c.sim.rig.rays_per_camera),
  };
  Entry fov{{"fov_deg", "horizontal field of view per camera in degrees"}, {}, {}};
  fov.get = [](const ExperimentConfig& c) { return format(c.sim.rig.fov * 180.0 / std::numbers::pi); };
  fov.set = [](ExperimentConfig& c, std::string_view t) {
    c.sim.rig.fov = parse_number<double>("fov_deg", t) * std::numbers::pi / 180.0;
  };
  e.push_back(fov);

  const std::vector<Entry> scenes = {
      OKD_FIELD("train_layouts", "obstacle layouts in the training suite", c.scenes.train_layouts),
      OKD_FIELD("train_skins", "skins per training layout", c.scenes.train_skins),
      OKD_FIELD("test_layouts", "obstacle layouts in the test suite", c.scenes.test_layouts),
      OKD_FIELD("test_skins", "held-out skins per test layout", c.scenes.test_skins),
      OKD_FIELD("test_new_layouts", "test on unseen layouts rather than the training ones",
                c.scenes.test_new_layouts),
      OKD_FIELD("density", "obstacle area over arena area, in [0.05, 0.20]", c.scenes.density),
      OKD_FIELD("min_obstacles", "fewest obstacles per layout", c.scenes.min_obstacles),
      OKD_FIELD("max_obstacles", "most obstacles per layout", c.scenes.max_obstacles),
  };
  e.insert(e.end(), scenes.begin(), scenes.end());
  Entry mode{{"goal_mode", "static, circular or mixed"}, {}, {}};
  mode.get = [](const ExperimentConfig& c) { return std::string(goal_mode_name(c.scenes.goal_mode)); };
  mode.set = [](ExperimentConfig& c, std::string_view t) {
    if (t == "static") {
      c.scenes.goal_mode = sim::GoalMode::Static;
    } else if (t == "circular") {
      c.scenes.goal_mode = sim::GoalMode::Circular;
    } else if (t == "mixed") {
      c.scenes.goal_mode = sim::GoalMode::Mixed;
    } else {
      throw ConfigError("key 'goal_mode': expected static, circular or mixed, got '" + std::string(t) + "'");
    }
  };
  e.push_back(mode);

  const std::vector<Entry> rest = {
      OKD_FIELD("orbit_radius", "radius of a circular goal's orbit in m", c.scenes.orbit_radius),
      OKD_FIELD("angular_speed", "angular speed of a circular goal in rad/s", c.scenes.angular_speed),
      // expert
      OKD_FIELD("k_att", "expert attraction gain in 1/s", c.expert.k_att),
      OKD_FIELD("k_rep", "expert repulsion gain in m^2/s", c.expert.k_rep),
      OKD_FIELD("rep_range", "expert repulsion range from obstacle surfaces in m", c.expert.rep_range),
      OKD_FIELD("k_psi", "expert heading gain in 1/s", c.expert.k_psi),
      OKD_FIELD("wall_repulsion", "arena walls repel the expert", c.expert.wall_repulsion),
      // collection
      OKD_FIELD("train_tuples", "tuples in the training dataset", c.collect.train_tuples),
      OKD_FIELD("test_tuples", "tuples in the held-out test dataset", c.collect.test_tuples),
      OKD_FIELD("render_all_skins", "re-render training episodes in every skin of their layout",
                c.collect.render_all_skins),
      OKD_FIELD("episodes", "episode cap per dataset, 0 = none", c.collect.episodes),
      // networks
      OKD_FIELD("teacher_embed", "teacher embedding width", c.net.teacher_embed),
      OKD_FIELD("student_embed", "student embedding width", c.net.student_embed),
      OKD_FIELD("goal_embed", "goal embedding width", c.net.goal_embed),
      OKD_FIELD("head_hidden", "hidden width of the action heads", c.net.head_hidden),
      OKD_FIELD("seq_len", "student window length (must be 5)", c.net.seq_len),
      // training
      OKD_FIELD("teacher_batch", "teacher minibatch size", c.train.teacher_batch),
      OKD_FIELD("student_batch", "student minibatch size", c.train.student_batch),
      OKD_FIELD("lr_encoder", "learning rate of the image encoders", c.train.lr_encoder),
      OKD_FIELD("lr_action", "learning rate of every other layer", c.train.lr_action),
      OKD_FIELD("tau", "InfoNCE temperature", c.train.tau),
      OKD_FIELD("lambda0", "weight of the student action loss", c.train.lambda0),
      OKD_FIELD("lambda1_start", "InfoNCE weight at the first epoch", c.train.lambda1_start),
      OKD_FIELD("lambda1_end", "InfoNCE weight at the last epoch", c.train.lambda1_end),
      OKD_FIELD("teacher_epochs", "teacher training epochs", c.train.teacher_epochs),
      OKD_FIELD("student_epochs", "student training epochs, split over DAgger rounds", c.train.student_epochs),
      OKD_FIELD("delta_min", "minimum distance between poses in a student batch in m", c.train.delta_min),
      OKD_FIELD("dagger_iterations", "DAgger rounds after the initial one", c.train.dagger_iterations),
      OKD_FIELD("dagger_episodes", "episodes collected per DAgger round", c.train.dagger_episodes),
      OKD_FIELD("dagger_beta", "expert mixing base, beta_i = dagger_beta^i", c.train.dagger_beta),
      OKD_FIELD("checkpoint_every", "epochs between weight checkpoints, 0 = off", c.checkpoint_every),
      // evaluation
      OKD_FIELD("episodes_per_scene", "benchmark episodes per test scene", c.eval.episodes_per_scene),
      OKD_FIELD("sim_skins", "skins compared by embed-sim", c.eval.sim_skins),
      OKD_FIELD("probe_stride", "steps between embed-sim probe poses", c.eval.probe_stride),
  };
  e.insert(e.end(), rest.begin(), rest.end());
  return e;
}

#undef OKD_FIELD

const std::vector<Entry>& entries() {
  static const std::vector<Entry> e = make_entries();
  return e;
}

const Entry& find_entry(std::string_view key) {
  const auto& es = entries();
  auto it = std::find_if(es.begin(), es.end(), [&](const Entry& e) { return e.key.name == key; });
  if (it != es.end()) return *it;
  std::string best;
  size_t best_d = SIZE_MAX;
  for (const auto& e : es) {
    const size_t d = edit_distance(key, e.key.name);
    if (d < best_d) {
      best_d = d;
      best = e.key.name;
    }
  }
  throw UnknownKeyError(std::string(key), best_d <= std::max<size_t>(2, key.size() / 3) ? best : "");
}

void apply(ExperimentConfig& cfg, std::string_view line, std::string_view origin) {
  const auto eq = line.find('=');
  if (eq == std::string_view::npos) {
    throw ConfigError(std::string(origin) + ": expected key = value, got '" + std::string(line) + "'");
  }
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  find_entry(key).set(cfg, value);
}

}  // namespace

distill::NetConfig ExperimentConfig::teacher_net() const {
  distill::NetConfig n;
  n.rays = static_cast<size_t>(sim.rig.rays_per_camera);
  n.embed = net.teacher_embed;
  n.goal_embed = net.goal_embed;
  n.head_hidden = net.head_hidden;
  n.seq_len = net.seq_len;
  return n;
}

distill::NetConfig ExperimentConfig::student_net() const {
  distill::NetConfig n = teacher_net();
  n.embed = net.student_embed;
  return n;
}

sim::SceneGenOptions ExperimentConfig::gen_options() const {
  sim::SceneGenOptions g;
  g.r_clear = sim.r_clear;
  g.goal_mode = scenes.goal_mode;
  g.orbit_radius = scenes.orbit_radius;
  g.angular_speed = scenes.angular_speed;
  return g;
}

distill::TrainConfig ExperimentConfig::train_config() const {
  distill::TrainConfig t = train;
  t.seed = seed;
  return t;
}

expert::ExpertConfig ExperimentConfig::expert_config() const {
  expert::ExpertConfig e = expert;
  e.v_max = sim.limits.v_max;
  e.omega_max = sim.limits.omega_max;
  e.robot_radius = sim.robot_radius;
  e.success_radius = sim.success_radius;
  return e;
}

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& e : entries()) k.push_back(e.key);
    return k;
  }();
  return keys;
}

size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (size_t j = 1; j <= b.size(); ++j) {
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

ExperimentConfig parse_config(std::string_view text, const std::vector<std::string>& overrides) {
  ExperimentConfig cfg;
  std::istringstream is{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (trim(line).empty()) continue;
    apply(cfg, line, "line " + std::to_string(lineno));
  }
  for (const auto& o : overrides) apply(cfg, o, "override '" + o + "'");
  validate(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read config '" + path.string() + "'");
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str(), overrides);
}

void validate(const ExperimentConfig& c) {
  auto need = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  need(c.net.teacher_embed == c.net.student_embed,
       "teacher_embed (" + std::to_string(c.net.teacher_embed) + ") must equal student_embed (" +
           std::to_string(c.net.student_embed) + ")");
  need(c.net.seq_len == 5, "seq_len must be 5, got " + std::to_string(c.net.seq_len));
  need(c.net.teacher_embed >= 1 && c.net.goal_embed >= 1 && c.net.head_hidden >= 1,
       "network widths must be >= 1");
  need(c.scenes.density >= 0.05 && c.scenes.density <= 0.20, "density must lie in [0.05, 0.20]");
  need(c.scenes.min_obstacles >= 1, "min_obstacles must be >= 1");
  need(c.scenes.min_obstacles <= c.scenes.max_obstacles, "min_obstacles must not exceed max_obstacles");
  need(c.scenes.train_layouts >= 1 && c.scenes.test_layouts >= 1, "suites need at least one layout");
  need(c.scenes.train_skins >= 1 && c.scenes.test_skins >= 1, "suites need at least one skin per layout");
  need(c.scenes.test_new_layouts || c.scenes.test_layouts <= c.scenes.train_layouts,
       "test_layouts must not exceed train_layouts unless test_new_layouts is set");
  need(c.scenes.orbit_radius > 0.0 && c.scenes.angular_speed > 0.0,
       "orbit_radius and angular_speed must be > 0");
  need(c.sim.dt > 0.0, "dt must be > 0");
  need(c.sim.horizon >= 1, "horizon must be >= 1");
  need(c.sim.robot_radius > 0.0, "robot_radius must be > 0");
  need(c.sim.limits.v_max > 0.0 && c.sim.limits.omega_max > 0.0, "v_max and omega_max must be > 0");
  need(c.sim.d_max > 0.0 && c.sim.d_shade > 0.0, "d_max and d_shade must be > 0");
  need(c.sim.r_clear > c.sim.robot_radius, "r_clear must exceed robot_radius");
  need(c.sim.success_radius > 0.0, "success_radius must be > 0");
  need(c.sim.depth_noise >= 0.0, "depth_noise must be >= 0");
  need(c.sim.rig.rays_per_camera >= 13, "rays_per_camera must be >= 13 for the encoder convolutions");
  need(c.sim.rig.fov > 0.0 && c.sim.rig.fov < 2.0 * std::numbers::pi, "fov_deg must lie in (0, 360)");
  need(c.expert.rep_range > c.sim.robot_radius, "rep_range must exceed robot_radius");
  expert::validate(c.expert_config());
  distill::validate(c.train);
  need(c.collect.train_tuples >= c.train.student_batch, "train_tuples must be at least student_batch");
  need(c.collect.test_tuples >= 1, "test_tuples must be >= 1");
  need(c.collect.episodes >= 0, "episodes must be >= 0");
  need(c.eval.episodes_per_scene >= 1, "episodes_per_scene must be >= 1");
  need(c.eval.sim_skins >= 2, "sim_skins must be >= 2");
  need(c.eval.probe_stride >= 1, "probe_stride must be >= 1");
  need(c.checkpoint_every >= 0, "checkpoint_every must be >= 0");
}

std::string to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const auto& e : entries()) {
    out += "# " + e.key.doc + "\n" + e.key.name + " = " + e.get(cfg) + "\n";
  }
  return out;
}

}  // namespace okd::cli
