#include "okd/sim/dataset.hpp"

#include <fstream>

#include "../common/binary_io.hpp"
#include "okd/errors.hpp"

namespace okd::sim {

namespace {
constexpr char kMagic[5] = "OKD1";
constexpr std::uint16_t kVersion = 1;
}  // namespace

void Dataset::append_episode(const EpisodeRecord& ep, std::uint32_t scene_id) {
  for (const auto& tu : ep.tuples) {
    if (static_cast<std::uint32_t>(tu.obs.rays) != rays_per_camera ||
        static_cast<std::uint32_t>(tu.obs.cameras) != camera_count) {
      throw ShapeError("episode observation shape does not match dataset");
    }
    DatasetRecord r;
    r.pose = tu.pose;
    r.goal_local = tu.goal_local;
    r.expert_action = tu.expert_action;
    r.executed_action = tu.executed_action;
    r.depth.assign(tu.obs.depth.begin(), tu.obs.depth.end());
    r.rgb.assign(tu.obs.rgb.begin(), tu.obs.rgb.end());
    r.scene_id = scene_id;
    r.step = static_cast<std::uint32_t>(tu.t);
    records.push_back(std::move(r));
  }
}

void Dataset::append(const Dataset& other) {
  if (other.rays_per_camera != rays_per_camera || other.camera_count != camera_count) {
    throw ShapeError("cannot append datasets with different sensor shapes");
  }
  records.insert(records.end(), other.records.begin(), other.records.end());
}

std::vector<size_t> Dataset::window(size_t i, int length) const {
  std::vector<size_t> idx(static_cast<size_t>(length), i);
  size_t first = i;
  const auto& cur = records[i];
  // Walk back while the previous record is the preceding step of the same episode.
  while (first > 0 && static_cast<int>(i - first) < length - 1) {
    const auto& prev = records[first - 1];
    const auto& here = records[first];
    if (here.step == 0 || prev.scene_id != cur.scene_id || prev.step + 1 != here.step) break;
    --first;
  }
  const size_t have = i - first + 1;
  const size_t pad = static_cast<size_t>(length) - have;
  for (size_t j = 0; j < static_cast<size_t>(length); ++j) {
    idx[j] = j < pad ? first : first + (j - pad);
  }
  return idx;
}

void write_dataset(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw IoError("cannot open '" + path.string() + "' for writing");
  using detail::write_le;
  detail::write_magic(os, kMagic);
  write_le<std::uint16_t>(os, kVersion);
  write_le<std::uint32_t>(os, ds.rays_per_camera);
  write_le<std::uint32_t>(os, ds.camera_count);
  write_le<std::uint64_t>(os, ds.records.size());
  const size_t n_depth = static_cast<size_t>(ds.camera_count) * ds.rays_per_camera;
  const size_t n_rgb = 3 * n_depth;
  for (const auto& r : ds.records) {
    if (r.depth.size() != n_depth || r.rgb.size() != n_rgb) {
      throw ShapeError("dataset record has wrong observation size");
    }
    for (double v : {r.pose.x, r.pose.y, r.pose.psi, r.goal_local.x, r.goal_local.y,
                     r.expert_action.vx, r.expert_action.vy, r.expert_action.omega,
                     r.executed_action.vx, r.executed_action.vy, r.executed_action.omega}) {
      write_le<double>(os, v);
    }
    for (float v : r.depth) write_le<float>(os, v);
    for (float v : r.rgb) write_le<float>(os, v);
    write_le<std::uint32_t>(os, r.scene_id);
    write_le<std::uint32_t>(os, r.step);
  }
  if (!os) throw IoError("write to '" + path.string() + "' failed");
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open '" + path.string() + "'");
  using detail::read_le;
  detail::expect_magic(is, kMagic, path.string());
  const auto version = read_le<std::uint16_t>(is);
  if (version != kVersion) throw FormatError("unsupported OKD1 version " + std::to_string(version));
  Dataset ds;
  ds.rays_per_camera = read_le<std::uint32_t>(is);
  ds.camera_count = read_le<std::uint32_t>(is);
  const auto count = read_le<std::uint64_t>(is);
  const size_t n_depth = static_cast<size_t>(ds.camera_count) * ds.rays_per_camera;
  ds.records.resize(count);
  for (auto& r : ds.records) {
    double v[11];
    for (double& x : v) x = read_le<double>(is);
    r.pose = {v[0], v[1], v[2]};
    r.goal_local = {v[3], v[4]};
    r.expert_action = {v[5], v[6], v[7]};
    r.executed_action = {v[8], v[9], v[10]};
    r.depth.resize(n_depth);
    r.rgb.resize(3 * n_depth);
    for (float& x : r.depth) x = read_le<float>(is);
    for (float& x : r.rgb) x = read_le<float>(is);
    r.scene_id = read_le<std::uint32_t>(is);
    r.step = read_le<std::uint32_t>(is);
  }
  return ds;
}

}  // namespace okd::sim
