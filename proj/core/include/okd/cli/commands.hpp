#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "okd/cli/config.hpp"
#include "okd/sim/suite.hpp"

namespace okd::cli {

enum class Command { GenScenes, Collect, TrainTeacher, TrainStudent, Eval, EmbedSim, Pipeline };

/// Null when name is not a command.
std::optional<Command> parse_command(std::string_view name);
const char* command_name(Command c);

struct CommandOptions {
  bool no_distill = false;  // train-student: action-only baseline
};

/// Runs one command; every artifact goes under cfg.out_dir, which also receives
/// the effective config as config.txt. Throws MissingPrerequisiteError naming the
/// producing command when an input artifact is absent.
void run_command(Command cmd, const ExperimentConfig& cfg, const CommandOptions& opts,
                 std::ostream& log);

// Artifact names inside out_dir.
namespace artifact {
inline constexpr const char* kConfig = "config.txt";
inline constexpr const char* kScenes = "scenes.json";
inline constexpr const char* kTrainData = "train.okd";
inline constexpr const char* kTestData = "test.okd";
inline constexpr const char* kTeacher = "teacher.okw";
inline constexpr const char* kTeacherLoss = "teacher_loss.csv";
inline constexpr const char* kStudent = "student.okw";
inline constexpr const char* kStudentLoss = "student_loss.csv";
inline constexpr const char* kStudentActionOnly = "student_action_only.okw";
inline constexpr const char* kStudentActionOnlyLoss = "student_action_only_loss.csv";
inline constexpr const char* kEvalReport = "eval_report.csv";
inline constexpr const char* kEvalEpisodes = "eval_episodes.csv";
inline constexpr const char* kEvalSummary = "eval_summary.txt";
inline constexpr const char* kEmbedSim = "embed_sim.csv";
inline constexpr const char* kEmbedSimPoses = "embed_sim_poses.csv";
inline constexpr const char* kEmbedSimSummary = "embed_sim_summary.txt";
}  // namespace artifact

struct SceneSuites {
  sim::SceneSuite train;
  sim::SceneSuite test;
};

/// Suites of a config, built from its seed.
SceneSuites make_suites(const ExperimentConfig& cfg);
void write_suites(const SceneSuites& s, const std::filesystem::path& path);
SceneSuites read_suites(const std::filesystem::path& path);

}  // namespace okd::cli
