#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "okd/sim/types.hpp"

namespace okd::sim {

/// One stored (state, observation, action) tuple. Observations are kept in
/// single precision, exactly as they appear in the OKD1 file.
struct DatasetRecord {
  Pose pose;
  Vec2 goal_local;
  Action expert_action;
  Action executed_action;
  std::vector<float> depth;  // [camera][ray]
  std::vector<float> rgb;    // [camera][channel][ray]
  std::uint32_t scene_id = 0;
  std::uint32_t step = 0;
};

/// Records in episode order; an episode starts at a record with step 0.
struct Dataset {
  std::uint32_t rays_per_camera = 64;
  std::uint32_t camera_count = 4;
  std::vector<DatasetRecord> records;

  size_t size() const { return records.size(); }
  bool empty() const { return records.empty(); }

  void append_episode(const EpisodeRecord& ep, std::uint32_t scene_id);
  void append(const Dataset& other);

  /// Indices of the length-L window ending at record i. Frames before the
  /// start of i's episode are filled by repeating the episode's first frame.
  std::vector<size_t> window(size_t i, int length) const;
};

void write_dataset(const Dataset& ds, const std::filesystem::path& path);
Dataset read_dataset(const std::filesystem::path& path);

}  // namespace okd::sim
