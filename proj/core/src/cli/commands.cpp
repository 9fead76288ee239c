#include "okd/cli/commands.hpp"

#include <climits>
#include <cstdio>
#include <fstream>
#include <ostream>

#include <json.hpp>

#include "okd/distill/dagger.hpp"
#include "okd/errors.hpp"
#include "okd/eval/eval.hpp"
#include "okd/nn/weights_io.hpp"

namespace okd::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Seed streams; each artifact draws from its own.
enum Stream : std::uint64_t {
  kTrainSuite = 1,
  kTestSuite = 2,
  kTrainCollect = 11,
  kTestCollect = 12,
  kTeacherInit = 21,
  kStudentInit = 31,
  kBenchmark = 41,
  kSimSkins = 51,
};

constexpr std::uint32_t kTestSceneIdBase = 1000;
constexpr std::uint64_t kTestSkinStream = 2000;

std::uint64_t stream(const ExperimentConfig& cfg, Stream s) { return sim::mix_seed(cfg.seed, s); }

fs::path require(const ExperimentConfig& cfg, const char* name, Command producer) {
  const fs::path p = fs::path(cfg.out_dir) / name;
  if (!fs::exists(p)) throw MissingPrerequisiteError(p.string(), command_name(producer));
  return p;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  os << text;
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

// ------------------------------------------------------------ suite json

json to_json(const sim::Color& c) { return json::array({c[0], c[1], c[2]}); }
sim::Color color_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()}; }

json to_json(const sim::SceneLayout& l) {
  json obstacles = json::array();
  for (const auto& o : l.obstacles) {
    obstacles.push_back({{"x", o.center.x}, {"y", o.center.y}, {"radius", o.radius},
                         {"appearance_id", o.appearance_id}});
  }
  json goal;
  if (l.goal.kind == sim::GoalSpec::Kind::Static) {
    goal = {{"kind", "static"}, {"x", l.goal.point.x}, {"y", l.goal.point.y}};
  } else {
    goal = {{"kind", "circular"},
            {"center_x", l.goal.center.x},
            {"center_y", l.goal.center.y},
            {"orbit_radius", l.goal.orbit_radius},
            {"angular_speed", l.goal.angular_speed},
            {"phase", l.goal.phase}};
  }
  return {{"arena_half_extent", l.arena_half_extent},
          {"density", l.density},
          {"obstacles", obstacles},
          {"start", {{"x", l.start.x}, {"y", l.start.y}, {"psi", l.start.psi}}},
          {"goal", goal}};
}

sim::SceneLayout layout_from(const json& j) {
  sim::SceneLayout l;
  l.arena_half_extent = j.at("arena_half_extent").get<double>();
  l.density = j.at("density").get<double>();
  for (const auto& o : j.at("obstacles")) {
    l.obstacles.push_back({{o.at("x").get<double>(), o.at("y").get<double>()},
                           o.at("radius").get<double>(), o.at("appearance_id").get<std::uint32_t>()});
  }
  const auto& s = j.at("start");
  l.start = {s.at("x").get<double>(), s.at("y").get<double>(), s.at("psi").get<double>()};
  const auto& g = j.at("goal");
  if (g.at("kind") == "static") {
    l.goal.kind = sim::GoalSpec::Kind::Static;
    l.goal.point = {g.at("x").get<double>(), g.at("y").get<double>()};
  } else {
    l.goal.kind = sim::GoalSpec::Kind::Circular;
    l.goal.center = {g.at("center_x").get<double>(), g.at("center_y").get<double>()};
    l.goal.orbit_radius = g.at("orbit_radius").get<double>();
    l.goal.angular_speed = g.at("angular_speed").get<double>();
    l.goal.phase = g.at("phase").get<double>();
  }
  return l;
}

json to_json(const sim::SceneSuite& suite) {
  json scenes = json::array();
  for (const auto& s : suite.scenes) {
    json palette = json::array();
    for (const auto& c : s.skin.palette) palette.push_back(to_json(c));
    scenes.push_back({{"scene_id", s.scene_id},
                      {"layout_seed", s.layout_seed},
                      {"skin_seed", s.skin_seed},
                      {"layout", to_json(s.layout)},
                      {"skin",
                       {{"palette", palette},
                        {"wall", to_json(s.skin.wall_color)},
                        {"background", to_json(s.skin.background_color)}}}});
  }
  return scenes;
}

sim::SceneSuite suite_from(const json& j) {
  sim::SceneSuite suite;
  for (const auto& s : j) {
    sim::SuiteScene sc;
    sc.scene_id = s.at("scene_id").get<std::uint32_t>();
    sc.layout_seed = s.at("layout_seed").get<std::uint64_t>();
    sc.skin_seed = s.at("skin_seed").get<std::uint64_t>();
    sc.layout = layout_from(s.at("layout"));
    for (const auto& c : s.at("skin").at("palette")) sc.skin.palette.push_back(color_from(c));
    sc.skin.wall_color = color_from(s.at("skin").at("wall"));
    sc.skin.background_color = color_from(s.at("skin").at("background"));
    suite.scenes.push_back(std::move(sc));
  }
  return suite;
}

// ------------------------------------------------------------ commands

struct Model {
  std::string name;
  const char* file;
};

void gen_scenes(const ExperimentConfig& cfg, std::ostream& log) {
  const auto suites = make_suites(cfg);
  write_suites(suites, fs::path(cfg.out_dir) / artifact::kScenes);
  log << "gen-scenes: " << suites.train.size() << " training scenes, " << suites.test.size()
      << " test scenes\n";
}

void collect(const ExperimentConfig& cfg, std::ostream& log) {
  const auto suites = read_suites(require(cfg, artifact::kScenes, Command::GenScenes));
  expert::ExpertPolicy expert(cfg.expert_config());
  sim::ExpertPassthroughPolicy follow;
  sim::CollectOptions co;
  co.episodes = cfg.collect.episodes > 0 ? cfg.collect.episodes : INT_MAX;
  co.sim = cfg.sim;
  co.gen = cfg.gen_options();

  co.max_tuples = cfg.collect.train_tuples;
  co.seed = stream(cfg, kTrainCollect);
  co.render_all_skins = cfg.collect.render_all_skins;
  const auto train = sim::collect_episodes(follow, expert, suites.train, co);
  sim::write_dataset(train, fs::path(cfg.out_dir) / artifact::kTrainData);

  co.max_tuples = cfg.collect.test_tuples;
  co.seed = stream(cfg, kTestCollect);
  co.render_all_skins = false;
  const auto test = sim::collect_episodes(follow, expert, suites.test, co);
  sim::write_dataset(test, fs::path(cfg.out_dir) / artifact::kTestData);
  log << "collect: " << train.size() << " training tuples, " << test.size() << " test tuples\n";
}

// checkpoints/<name>_eNNN.okw after every checkpoint_every-th epoch (1-based).
template <class Net>
void checkpoint(const ExperimentConfig& cfg, const std::string& name, int epoch, Net& net) {
  if (cfg.checkpoint_every <= 0 || (epoch + 1) % cfg.checkpoint_every != 0) return;
  const fs::path dir = fs::path(cfg.out_dir) / "checkpoints";
  fs::create_directories(dir);
  char file[64];
  std::snprintf(file, sizeof file, "%s_e%03d.okw", name.c_str(), epoch + 1);
  nn::write_weights(dir / file, net.parameters());
}

void train_teacher(const ExperimentConfig& cfg, std::ostream& log) {
  const auto ds = sim::read_dataset(require(cfg, artifact::kTrainData, Command::Collect));
  distill::TeacherNet net(cfg.teacher_net(), stream(cfg, kTeacherInit));
  const auto trace = distill::train_teacher(net, ds, cfg.train_config(), [&](int epoch) {
    log << "train-teacher: epoch " << epoch + 1 << "/" << cfg.train.teacher_epochs << '\n';
    checkpoint(cfg, "teacher", epoch, net);
  });
  nn::write_weights(fs::path(cfg.out_dir) / artifact::kTeacher, net.parameters());
  distill::write_loss_csv(trace, fs::path(cfg.out_dir) / artifact::kTeacherLoss);
  if (!trace.empty()) log << "train-teacher: final loss " << trace.back().total << '\n';
}

void train_student(const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  const auto ds = sim::read_dataset(require(cfg, artifact::kTrainData, Command::Collect));
  const auto teacher_path = require(cfg, artifact::kTeacher, Command::TrainTeacher);
  const auto suites = read_suites(require(cfg, artifact::kScenes, Command::GenScenes));
  distill::TeacherNet teacher(cfg.teacher_net(), 0);
  {
    auto params = teacher.parameters();
    nn::read_weights(teacher_path, params);
  }
  distill::StudentNet net(cfg.student_net(), stream(cfg, kStudentInit));
  distill::DaggerOptions dopt;
  dopt.sim = cfg.sim;
  dopt.gen = cfg.gen_options();
  dopt.expert = cfg.expert_config();
  const bool distill = !opts.no_distill;
  dopt.on_epoch = [&](int epoch) {
    checkpoint(cfg, distill ? "student" : "student_action_only", epoch, net);
  };
  const auto res = distill::train_student_dagger(net, &teacher, ds, suites.train, cfg.train_config(),
                                                 distill, dopt);
  const char* weights = distill ? artifact::kStudent : artifact::kStudentActionOnly;
  const char* loss = distill ? artifact::kStudentLoss : artifact::kStudentActionOnlyLoss;
  nn::write_weights(fs::path(cfg.out_dir) / weights, net.parameters());
  distill::write_loss_csv(res.trace, fs::path(cfg.out_dir) / loss);
  log << "train-student" << (distill ? "" : " --no-distill") << ": " << res.trace.size()
      << " steps on " << res.aggregated.size() << " tuples";
  if (!res.trace.empty()) log << ", final loss " << res.trace.back().total;
  log << '\n';
}

template <class Net>
bool load_if_present(const fs::path& path, Net& net) {
  if (!fs::exists(path)) return false;
  auto params = net.parameters();
  nn::read_weights(path, params);
  return true;
}

void evaluate(const ExperimentConfig& cfg, std::ostream& log) {
  const auto test = sim::read_dataset(require(cfg, artifact::kTestData, Command::Collect));
  const auto suites = read_suites(require(cfg, artifact::kScenes, Command::GenScenes));
  const fs::path out(cfg.out_dir);
  distill::TeacherNet teacher(cfg.teacher_net(), 0);
  {
    auto params = teacher.parameters();
    nn::read_weights(require(cfg, artifact::kTeacher, Command::TrainTeacher), params);
  }
  distill::StudentNet student(cfg.student_net(), 0), baseline(cfg.student_net(), 0);
  const bool has_student = load_if_present(out / artifact::kStudent, student);
  const bool has_baseline = load_if_present(out / artifact::kStudentActionOnly, baseline);

  expert::ExpertPolicy expert(cfg.expert_config());
  eval::BenchmarkOptions bo;
  bo.episodes_per_scene = cfg.eval.episodes_per_scene;
  bo.seed = stream(cfg, kBenchmark);
  bo.sim = cfg.sim;
  bo.gen = cfg.gen_options();

  std::string report = "model,ae_test,sr,md_mean,md_std,episodes\n";
  std::string summary;
  auto run = [&](const std::string& name, const eval::OfflinePolicy& offline, sim::Policy& online) {
    const double ae = eval::action_error(offline, test);
    const auto r = eval::run_benchmark(online, expert, suites.test, bo);
    report += name + "," + fmt(ae) + "," + fmt(r.sr) + "," + fmt(r.md_mean) + "," + fmt(r.md_std) +
              "," + std::to_string(r.episodes) + "\n";
    summary += "[" + name + "]\nae_test: " + fmt(ae) + "\n" + eval::summary_text(r);
    eval::write_episode_csv(r, out / ("eval_episodes_" + name + ".csv"));
    log << "eval: " << name << " ae " << ae << " sr " << r.sr << '\n';
  };
  {
    eval::TeacherOffline off(teacher);
    distill::TeacherPolicy on(teacher);
    run("teacher", off, on);
  }
  if (has_student) {
    eval::StudentOffline off(student);
    distill::StudentPolicy on(student);
    run("student", off, on);
  }
  if (has_baseline) {
    eval::StudentOffline off(baseline);
    distill::StudentPolicy on(baseline);
    run("student_action_only", off, on);
  }
  write_text(out / artifact::kEvalReport, report);
  write_text(out / artifact::kEvalSummary, summary);
}

void embed_sim(const ExperimentConfig& cfg, std::ostream& log) {
  const auto suites = read_suites(require(cfg, artifact::kScenes, Command::GenScenes));
  const fs::path out(cfg.out_dir);
  distill::TeacherNet teacher(cfg.teacher_net(), 0);
  {
    auto params = teacher.parameters();
    nn::read_weights(require(cfg, artifact::kTeacher, Command::TrainTeacher), params);
  }
  distill::StudentNet student(cfg.student_net(), 0), baseline(cfg.student_net(), 0);
  const bool has_student = load_if_present(out / artifact::kStudent, student);
  const bool has_baseline = load_if_present(out / artifact::kStudentActionOnly, baseline);

  // One held-out layout seen through sim_skins fresh skins.
  const auto& scene = suites.test.scenes.front();
  std::vector<sim::AppearanceSkin> skins;
  const auto n_ids = static_cast<std::uint32_t>(std::max(cfg.scenes.max_obstacles, 1));
  for (int i = 0; i < cfg.eval.sim_skins; ++i) {
    skins.push_back(sim::generate_skin(sim::mix_seed(stream(cfg, kSimSkins), static_cast<std::uint64_t>(i)), n_ids));
  }
  expert::ExpertPolicy expert(cfg.expert_config());
  const auto probes = eval::expert_probes(scene.layout, scene.skin, expert, cfg.sim,
                                          cfg.eval.probe_stride, cfg.net.seq_len);

  std::string table = "model,mu,pairs,probes\n";
  std::string poses = "model,probe,similarity\n";
  std::string summary;
  auto run = [&](const std::string& name, const eval::EmbedFn& fn) {
    const auto r = eval::embedding_similarity(fn, scene.layout, skins, probes);
    table += name + "," + fmt(r.mu) + "," + std::to_string(r.pairs) + "," + std::to_string(probes.size()) + "\n";
    for (size_t p = 0; p < r.per_pose.size(); ++p) {
      poses += name + "," + std::to_string(p) + "," + fmt(r.per_pose[p]) + "\n";
    }
    summary += name + "_mu: " + fmt(r.mu) + "\n";
    log << "embed-sim: " << name << " mu " << r.mu << '\n';
  };
  run("teacher", eval::teacher_embedder(teacher, cfg.sim));
  if (has_student) run("student", eval::student_embedder(student, cfg.sim));
  if (has_baseline) run("student_action_only", eval::student_embedder(baseline, cfg.sim));
  write_text(out / artifact::kEmbedSim, table);
  write_text(out / artifact::kEmbedSimPoses, poses);
  write_text(out / artifact::kEmbedSimSummary, summary);

  // Raw embeddings of the test set, for external projection.
  const fs::path test_path = out / artifact::kTestData;
  if (fs::exists(test_path)) {
    const auto test = sim::read_dataset(test_path);
    eval::export_embeddings(eval::teacher_row_embedder(teacher), test, out / "embeddings_teacher.csv");
    if (has_student) {
      eval::export_embeddings(eval::student_row_embedder(student), test, out / "embeddings_student.csv");
    }
    if (has_baseline) {
      eval::export_embeddings(eval::student_row_embedder(baseline), test,
                              out / "embeddings_student_action_only.csv");
    }
  }
}

}  // namespace

std::optional<Command> parse_command(std::string_view name) {
  for (auto c : {Command::GenScenes, Command::Collect, Command::TrainTeacher, Command::TrainStudent,
                 Command::Eval, Command::EmbedSim, Command::Pipeline}) {
    if (name == command_name(c)) return c;
  }
  return std::nullopt;
}

const char* command_name(Command c) {
  switch (c) {
    case Command::GenScenes:
      return "gen-scenes";
    case Command::Collect:
      return "collect";
    case Command::TrainTeacher:
      return "train-teacher";
    case Command::TrainStudent:
      return "train-student";
    case Command::Eval:
      return "eval";
    case Command::EmbedSim:
      return "embed-sim";
    case Command::Pipeline:
      return "pipeline";
  }
  return "?";
}

SceneSuites make_suites(const ExperimentConfig& cfg) {
  sim::SuiteSpec spec;
  spec.density = cfg.scenes.density;
  spec.counts = {cfg.scenes.min_obstacles, cfg.scenes.max_obstacles};
  spec.gen = cfg.gen_options();

  SceneSuites s;
  spec.seed = stream(cfg, kTrainSuite);
  spec.layouts = cfg.scenes.train_layouts;
  spec.skins_per_layout = cfg.scenes.train_skins;
  spec.first_scene_id = 0;
  s.train = sim::make_suite(spec);

  // Held-out skins on the training layouts, or entirely new layouts.
  if (cfg.scenes.test_new_layouts) spec.seed = stream(cfg, kTestSuite);
  spec.skin_stream = kTestSkinStream;
  spec.layouts = cfg.scenes.test_layouts;
  spec.skins_per_layout = cfg.scenes.test_skins;
  spec.first_scene_id = kTestSceneIdBase;
  s.test = sim::make_suite(spec);
  return s;
}

void write_suites(const SceneSuites& s, const fs::path& path) {
  const json j = {{"format", "okd-scenes"}, {"version", 1}, {"train", to_json(s.train)}, {"test", to_json(s.test)}};
  write_text(path, j.dump(2) + "\n");
}

SceneSuites read_suites(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot read '" + path.string() + "'");
  try {
    const json j = json::parse(is);
    if (j.at("format") != "okd-scenes") throw FormatError(path.string() + ": not a scene suite file");
    return {suite_from(j.at("train")), suite_from(j.at("test"))};
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void run_command(Command cmd, const ExperimentConfig& cfg, const CommandOptions& opts, std::ostream& log) {
  validate(cfg);
  fs::create_directories(cfg.out_dir);
  write_text(fs::path(cfg.out_dir) / artifact::kConfig, to_text(cfg));
  switch (cmd) {
    case Command::GenScenes:
      gen_scenes(cfg, log);
      break;
    case Command::Collect:
      collect(cfg, log);
      break;
    case Command::TrainTeacher:
      train_teacher(cfg, log);
      break;
    case Command::TrainStudent:
      train_student(cfg, opts, log);
      break;
    case Command::Eval:
      evaluate(cfg, log);
      break;
    case Command::EmbedSim:
      embed_sim(cfg, log);
      break;
    case Command::Pipeline:
      gen_scenes(cfg, log);
      collect(cfg, log);
      train_teacher(cfg, log);
      train_student(cfg, {false}, log);
      train_student(cfg, {true}, log);
      evaluate(cfg, log);
      embed_sim(cfg, log);
      break;
  }
}

}  // namespace okd::cli
