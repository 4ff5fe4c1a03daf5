#pragma once

// Parametric dyadic scenes with analytically known geometry, used as ground
// truth for end-to-end pipeline tests. Each clip places two copies of a fixed
// skeleton template (rotated about the vertical axis, translated to a sampled
// position). The emitted camera translation deliberately carries a wrong
// depth (+0.5 m); the true depth lives in bev_depth, so any consumer that
// fails to fuse depth misses the analytic targets by a visible margin.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sociopose/common.hpp"
#include "sociopose/geometry.hpp"
#include "sociopose/rng.hpp"

namespace sociopose {

struct Placement {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();  // pelvis position, meters
  double yaw = 0.0;                                    // about vertical (y), radians
};

struct PlacementRange {
  double x_min = -2.0, x_max = 2.0;
  double y_min = 0.0, y_max = 0.0;
  double z_min = 1.5, z_max = 6.0;
  double yaw_min = -3.14159265358979323846, yaw_max = 3.14159265358979323846;
};

struct SceneParams {
  int n_clips = 10;
  int n_frames = 90;
  double noise_sigma = 0.0;  // i.i.d. Gaussian jitter on root-relative joints, meters
  std::uint64_t seed = 0;
  PlacementRange agent_a;
  PlacementRange agent_b;
  double train_fraction = 0.8;
  std::string clip_prefix = "clip";

  void validate() const {
    if (n_clips < 1) throw ConfigError("synth: n_clips must be >= 1");
    if (n_frames < 1) throw ConfigError("synth: n_frames must be >= 1");
    if (noise_sigma < 0.0) throw ConfigError("synth: noise_sigma must be >= 0");
    if (train_fraction < 0.0 || train_fraction > 1.0)
      throw ConfigError("synth: train_fraction must be in [0,1]");
    for (const auto* r : {&agent_a, &agent_b})
      if (r->z_min <= 0.0) throw ConfigError("synth: z range must be positive (bev_depth > 0)");
  }
};

// Fixed upright skeleton, root-relative (pelvis at the origin, +y up, +z the
// facing direction). Joints 0-23 are the canonical body set; 24+ are face,
// ear, hand and foot landmarks. Only neck/nose/eyes enter the social pose
// math; the nose sits so that the head-center-to-nose and neck-to-nose
// vectors average to a pure +z vector.
struct SkeletonTemplate {
  JointSet offsets = JointSet::Zero();
  JointMap map;

  static SkeletonTemplate canonical() {
    SkeletonTemplate t;
    auto set = [&t](int j, double x, double y, double z) { t.offsets.row(j) << x, y, z; };
    set(0, 0.00, 0.00, 0.00);    // pelvis (root)
    set(1, 0.09, -0.06, 0.00);   // left hip
    set(2, -0.09, -0.06, 0.00);  // right hip
    set(3, 0.00, 0.12, 0.00);    // spine1
    set(4, 0.10, -0.50, 0.00);   // left knee
    set(5, -0.10, -0.50, 0.00);  // right knee
    set(6, 0.00, 0.25, 0.00);    // spine2
    set(7, 0.10, -0.90, 0.02);   // left ankle
    set(8, -0.10, -0.90, 0.02);  // right ankle
    set(9, 0.00, 0.33, 0.00);    // spine3
    set(10, 0.11, -0.96, 0.10);  // left foot
    set(11, -0.11, -0.96, 0.10); // right foot
    set(12, 0.00, 0.46, 0.00);   // neck
    set(13, 0.08, 0.42, 0.00);   // left collar
    set(14, -0.08, 0.42, 0.00);  // right collar
    set(15, 0.00, 0.56, 0.01);   // head
    set(16, 0.18, 0.40, 0.00);   // left shoulder
    set(17, -0.18, 0.40, 0.00);  // right shoulder
    set(18, 0.22, 0.14, 0.01);   // left elbow
    set(19, -0.22, 0.14, 0.01);  // right elbow
    set(20, 0.24, -0.10, 0.04);  // left wrist
    set(21, -0.24, -0.10, 0.04); // right wrist
    set(22, 0.25, -0.18, 0.06);  // left hand
    set(23, -0.25, -0.18, 0.06); // right hand
    set(24, 0.000, 0.535, 0.095);  // nose
    set(25, 0.032, 0.610, 0.000);  // left eye
    set(26, -0.032, 0.610, 0.000); // right eye
    set(27, 0.070, 0.580, -0.02);  // left ear
    set(28, -0.070, 0.580, -0.02); // right ear
    set(29, 0.14, -0.98, 0.16);    // left big toe
    set(30, -0.14, -0.98, 0.16);   // right big toe
    set(31, 0.16, -0.98, 0.14);    // left small toe
    set(32, -0.16, -0.98, 0.14);   // right small toe
    set(33, 0.10, -1.00, -0.02);   // left heel
    set(34, -0.10, -1.00, -0.02);  // right heel
    set(35, 0.26, -0.22, 0.08);    // left thumb
    set(36, -0.26, -0.22, 0.08);   // right thumb
    set(37, 0.27, -0.24, 0.06);    // left index
    set(38, -0.27, -0.24, 0.06);   // right index
    set(39, 0.28, -0.25, 0.05);    // left middle
    set(40, -0.28, -0.25, 0.05);   // right middle
    set(41, 0.27, -0.26, 0.04);    // left ring
    set(42, -0.27, -0.26, 0.04);   // right ring
    set(43, 0.26, -0.26, 0.03);    // left pinky
    set(44, -0.26, -0.26, 0.03);   // right pinky
    return t;
  }

  // Facing direction of the un-rotated template, computed through the same
  // head-direction math the extraction uses.
  Eigen::Vector3d forward() const { return head_direction(offsets, map); }

  // Head-center offset from the pelvis; lies on the yaw axis, so it is
  // rotation-invariant.
  Eigen::Vector3d head_center_offset() const { return head_center(offsets, map); }
};

inline Eigen::Matrix3d yaw_rotation(double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  Eigen::Matrix3d R;
  R << c, 0.0, s, 0.0, 1.0, 0.0, -s, 0.0, c;
  return R;
}

struct AnalyticTargets {
  double distance = 0.0;   // head-center distance, meters
  double facing = 0.0;     // symmetric mean cosine in [-1, 1]
  double depth_gap = 0.0;  // |z1 - z2| of head centers, meters
};

inline AnalyticTargets analytic_targets(const std::array<Placement, 2>& placements,
                                        const SkeletonTemplate& tpl) {
  const Eigen::Vector3d hco = tpl.head_center_offset();
  const Eigen::Vector3d fwd = tpl.forward();
  const Eigen::Vector3d c1 = placements[0].position + hco;
  const Eigen::Vector3d c2 = placements[1].position + hco;
  const Eigen::Vector3d d1 = yaw_rotation(placements[0].yaw) * fwd;
  const Eigen::Vector3d d2 = yaw_rotation(placements[1].yaw) * fwd;
  const double dist = (c2 - c1).norm();
  if (dist < 1e-9) throw DataError("analytic_targets: coincident head centers");
  const Eigen::Vector3d u12 = (c2 - c1) / dist;
  AnalyticTargets t;
  t.distance = dist;
  t.facing = 0.5 * (d1.dot(u12) + d2.dot(-u12));
  t.depth_gap = std::abs(c1.z() - c2.z());
  return t;
}

struct SceneClip {
  std::string clip_id;
  bool train = true;
  std::array<Placement, 2> placements;
  AnalyticTargets targets;
  JointTrack track;
};

namespace detail {

inline std::string clip_name(const std::string& prefix, int index, int n_clips) {
  int width = 4;
  for (int v = n_clips - 1; v >= 10000; v /= 10) ++width;
  std::string num = std::to_string(index);
  if (static_cast<int>(num.size()) < width) num.insert(0, static_cast<std::size_t>(width) - num.size(), '0');
  return prefix + num;
}

inline Placement draw_placement(Rng& rng, const PlacementRange& r) {
  Placement p;
  p.position = {rng.uniform(r.x_min, r.x_max), rng.uniform(r.y_min, r.y_max),
                rng.uniform(r.z_min, r.z_max)};
  p.yaw = rng.uniform(r.yaw_min, r.yaw_max);
  return p;
}

}  // namespace detail

// Deterministic given the seed; clip i uses the derived stream
// hash(seed, "scene", i). Emitted translation z is position.z + 0.5 (wrong on
// purpose); bev_depth carries the true depth.
inline std::vector<SceneClip> gen_scene(const SceneParams& params,
                                        const SkeletonTemplate& tpl = SkeletonTemplate::canonical()) {
  params.validate();
  tpl.map.validate();
  std::vector<SceneClip> clips;
  clips.reserve(static_cast<std::size_t>(params.n_clips));
  const int n_train = static_cast<int>(std::lround(params.train_fraction * params.n_clips));

  for (int i = 0; i < params.n_clips; ++i) {
    Rng rng(derive_seed(params.seed, "scene", static_cast<std::uint64_t>(i)));
    SceneClip clip;
    clip.clip_id = detail::clip_name(params.clip_prefix, i, params.n_clips);
    clip.train = i < n_train;

    bool placed = false;
    for (int attempt = 0; attempt < 16 && !placed; ++attempt) {
      clip.placements = {detail::draw_placement(rng, params.agent_a),
                         detail::draw_placement(rng, params.agent_b)};
      try {
        clip.targets = analytic_targets(clip.placements, tpl);
        placed = true;
      } catch (const DataError&) {
        // coincident draw; retry
      }
    }
    if (!placed)
      throw DataError("gen_scene: clip " + clip.clip_id + " degenerate after bounded retries");

    std::array<Eigen::Matrix3d, 2> rot = {yaw_rotation(clip.placements[0].yaw),
                                          yaw_rotation(clip.placements[1].yaw)};
    clip.track.clip_id = clip.clip_id;
    clip.track.frames.resize(static_cast<std::size_t>(params.n_frames));
    for (int f = 0; f < params.n_frames; ++f) {
      for (int a = 0; a < 2; ++a) {
        AgentFrame& frame = clip.track.frames[static_cast<std::size_t>(f)][static_cast<std::size_t>(a)];
        frame.joints = tpl.offsets * rot[static_cast<std::size_t>(a)].transpose();
        if (params.noise_sigma > 0.0)
          for (int j = 0; j < kJointCount; ++j)
            for (int k = 0; k < 3; ++k) frame.joints(j, k) += params.noise_sigma * rng.normal();
        const Eigen::Vector3d pos = clip.placements[static_cast<std::size_t>(a)].position;
        frame.translation = {pos.x(), pos.y(), pos.z() + 0.5};
        frame.bev_depth = pos.z();
      }
    }
    clips.push_back(std::move(clip));
  }
  return clips;
}

}  // namespace sociopose
