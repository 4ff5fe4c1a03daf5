#pragma once

// Clip-level pose feature extraction from dyadic joint tracks.
//
// A track carries, per frame and per agent, 45 root-relative 3D joints plus a
// camera-space translation and a metric depth estimate. Depth fusion replaces
// the translation's z with the metric depth; joints are placed in scene space
// by adding the fused translation. From the scene-space joints we derive
//   - joints3d: the 45x3 coordinates per agent, averaged over frames (270-d)
//   - social3d: per-agent head center + unit head direction, averaged (12-d)
//   - social2d: social3d with the depth components removed (8-d)
// Agents are ordered canonically (ascending temporal-mean head-center x, then
// mean z, then input order) so features do not depend on upstream labeling.

#include <Eigen/Core>
#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "sociopose/common.hpp"

namespace sociopose {

inline constexpr int kJointCount = 45;

using JointSet = Eigen::Matrix<double, kJointCount, 3>;

// Indices of the head-geometry joints within the 45-joint extended set.
// Defaults follow the SMPL convention (neck = body joint 12) with the face
// landmarks appended after the 24 canonical body joints; the exact positions
// of the extra landmarks are configuration and must match the upstream model.
struct JointMap {
  int neck = 12;
  int nose = 24;
  int left_eye = 25;
  int right_eye = 26;

  void validate() const {
    const int idx[4] = {neck, nose, left_eye, right_eye};
    for (int i : idx)
      if (i < 0 || i >= kJointCount)
        throw ConfigError("joint_map index " + std::to_string(i) + " outside [0, " +
                          std::to_string(kJointCount) + ")");
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j)
        if (idx[i] == idx[j]) throw ConfigError("joint_map indices must be distinct");
  }
};

struct AgentFrame {
  JointSet joints = JointSet::Zero();    // root-relative, meters
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();  // camera-space, meters
  double bev_depth = 1.0;                // metric depth, meters, > 0
};

struct JointTrack {
  std::string clip_id;
  std::vector<std::array<AgentFrame, 2>> frames;  // nominal length 90
};

struct SocialPose {
  Eigen::Vector3d position;   // head center, meters
  Eigen::Vector3d direction;  // unit head-direction vector
};

enum class FeatureKind { joints3d, social3d, social2d, embedding };

inline const char* to_string(FeatureKind k) {
  switch (k) {
    case FeatureKind::joints3d: return "joints3d";
    case FeatureKind::social3d: return "social3d";
    case FeatureKind::social2d: return "social2d";
    case FeatureKind::embedding: return "embedding";
  }
  return "?";
}

struct ClipFeature {
  std::string clip_id;
  FeatureKind kind = FeatureKind::embedding;
  Eigen::VectorXd values;
};

inline int expected_width(FeatureKind k) {
  switch (k) {
    case FeatureKind::joints3d: return 2 * kJointCount * 3;  // 270
    case FeatureKind::social3d: return 12;
    case FeatureKind::social2d: return 8;
    case FeatureKind::embedding: return -1;
  }
  return -1;
}

struct ExtractOptions {
  // Fraction of frames that must pass validation for a clip to be kept.
  // 1.0 rejects the whole clip on any bad frame (the strict exclusion policy);
  // lower values drop bad frames and average over the rest.
  double min_frame_coverage = 1.0;
};

// ---------------------------------------------------------------- depth fusion

inline Eigen::Vector3d fuse_depth(const Eigen::Vector3d& translation, double bev_depth,
                                  const std::string& context = {}) {
  if (!std::isfinite(bev_depth) || bev_depth <= 0.0)
    throw DataError("bev_depth must be finite and > 0, got " + dtos(bev_depth) +
                    (context.empty() ? "" : " (" + context + ")"));
  return {translation.x(), translation.y(), bev_depth};
}

inline JointSet absolute_joints(const AgentFrame& agent) {
  const Eigen::Vector3d t = fuse_depth(agent.translation, agent.bev_depth);
  return agent.joints.rowwise() + t.transpose();
}

// ---------------------------------------------------------------- head geometry

inline Eigen::Vector3d head_center(const JointSet& joints, const JointMap& map) {
  return 0.5 * (joints.row(map.left_eye) + joints.row(map.right_eye)).transpose();
}

// Mean of the head-center-to-nose and neck-to-nose vectors, normalized.
inline Eigen::Vector3d head_direction(const JointSet& joints, const JointMap& map,
                                      const std::string& context = {}) {
  const Eigen::Vector3d nose = joints.row(map.nose).transpose();
  const Eigen::Vector3d neck = joints.row(map.neck).transpose();
  const Eigen::Vector3d hc = head_center(joints, map);
  const Eigen::Vector3d v = 0.5 * ((nose - hc) + (nose - neck));
  const double n = v.norm();
  if (n < 1e-9)
    throw DataError("degenerate head direction" + (context.empty() ? "" : " (" + context + ")"));
  return v / n;
}

inline SocialPose frame_social_pose(const AgentFrame& agent, const JointMap& map,
                                    const std::string& context = {}) {
  const JointSet abs = absolute_joints(agent);
  return {head_center(abs, map), head_direction(abs, map, context)};
}

// ---------------------------------------------------------------- track summary

namespace detail {

inline bool agent_frame_valid(const AgentFrame& a) {
  if (!a.joints.allFinite() || !a.translation.allFinite()) return false;
  if (!std::isfinite(a.bev_depth) || a.bev_depth <= 0.0) return false;
  return true;
}

struct AgentSummary {
  Eigen::Vector3d mean_head_center = Eigen::Vector3d::Zero();
  Eigen::Vector3d mean_head_direction = Eigen::Vector3d::Zero();
  JointSet mean_joints = JointSet::Zero();
};

struct TrackSummary {
  std::array<AgentSummary, 2> agents;  // canonical order
  int frames_used = 0;
  int frames_total = 0;
};

inline std::string frame_context(const JointTrack& track, std::size_t frame, int agent) {
  return "clip " + track.clip_id + ", frame " + std::to_string(frame) + ", agent " +
         std::to_string(agent);
}

// need_direction: the joint-feature path only needs head centers (for the
// canonical ordering), so coincident face joints must not reject it there.
inline TrackSummary summarize_track(const JointTrack& track, const JointMap& map,
                                    const ExtractOptions& opts, bool need_direction) {
  map.validate();
  if (track.frames.empty()) throw DataError("clip " + track.clip_id + ": track has no frames");
  const bool strict = opts.min_frame_coverage >= 1.0;

  std::array<AgentSummary, 2> acc;
  int used = 0;
  for (std::size_t f = 0; f < track.frames.size(); ++f) {
    std::array<SocialPose, 2> poses;
    std::array<JointSet, 2> abs;
    bool ok = true;
    for (int a = 0; a < 2 && ok; ++a) {
      const AgentFrame& agent = track.frames[f][a];
      if (!agent_frame_valid(agent)) {
        if (strict)
          throw DataError("invalid agent frame (" + frame_context(track, f, a) + ")");
        ok = false;
        break;
      }
      abs[a] = absolute_joints(agent);
      try {
        poses[a].position = head_center(abs[a], map);
        poses[a].direction = need_direction
                                 ? head_direction(abs[a], map, frame_context(track, f, a))
                                 : Eigen::Vector3d::Zero();
      } catch (const DataError&) {
        if (strict) throw;
        ok = false;
      }
    }
    if (!ok) continue;
    for (int a = 0; a < 2; ++a) {
      acc[a].mean_head_center += poses[a].position;
      acc[a].mean_head_direction += poses[a].direction;
      acc[a].mean_joints += abs[a];
    }
    ++used;
  }

  const int total = static_cast<int>(track.frames.size());
  if (used == 0 || static_cast<double>(used) / total < opts.min_frame_coverage)
    throw DataError("clip " + track.clip_id + ": only " + std::to_string(used) + "/" +
                    std::to_string(total) + " frames valid (min coverage " +
                    dtos(opts.min_frame_coverage) + ")");
  for (int a = 0; a < 2; ++a) {
    acc[a].mean_head_center /= used;
    acc[a].mean_head_direction /= used;
    acc[a].mean_joints /= used;
  }

  TrackSummary out;
  out.frames_used = used;
  out.frames_total = total;
  // Canonical agent order: ascending mean head-center x, then mean z, then input order.
  const auto& a0 = acc[0].mean_head_center;
  const auto& a1 = acc[1].mean_head_center;
  const bool swap =
      (a1.x() != a0.x()) ? (a1.x() < a0.x()) : ((a1.z() != a0.z()) ? (a1.z() < a0.z()) : false);
  out.agents[0] = swap ? acc[1] : acc[0];
  out.agents[1] = swap ? acc[0] : acc[1];
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- clip features

// 12-dim: per agent (x, y, z, dx, dy, dz), averaged over frames.
inline ClipFeature clip_social_pose_3d(const JointTrack& track, const JointMap& map,
                                       const ExtractOptions& opts = {}) {
  const auto s = detail::summarize_track(track, map, opts, /*need_direction=*/true);
  Eigen::VectorXd v(12);
  for (int a = 0; a < 2; ++a) {
    v.segment<3>(6 * a) = s.agents[a].mean_head_center;
    v.segment<3>(6 * a + 3) = s.agents[a].mean_head_direction;
  }
  return {track.clip_id, FeatureKind::social3d, v};
}

// 8-dim: per agent (x, y, dx, dy); direction components are not renormalized.
inline ClipFeature project_2d(const ClipFeature& social3d) {
  if (social3d.kind != FeatureKind::social3d || social3d.values.size() != 12)
    throw DataError("project_2d expects a 12-dim social3d feature");
  Eigen::VectorXd v(8);
  for (int a = 0; a < 2; ++a) {
    v[4 * a + 0] = social3d.values[6 * a + 0];  // x
    v[4 * a + 1] = social3d.values[6 * a + 1];  // y
    v[4 * a + 2] = social3d.values[6 * a + 3];  // dx
    v[4 * a + 3] = social3d.values[6 * a + 4];  // dy
  }
  return {social3d.clip_id, FeatureKind::social2d, v};
}

// 270-dim: scene-space joints averaged over frames, both agents in canonical order.
inline ClipFeature clip_joint_feature(const JointTrack& track, const JointMap& map,
                                      const ExtractOptions& opts = {}) {
  const auto s = detail::summarize_track(track, map, opts, /*need_direction=*/false);
  Eigen::VectorXd v(2 * kJointCount * 3);
  for (int a = 0; a < 2; ++a)
    for (int j = 0; j < kJointCount; ++j)
      v.segment<3>(a * kJointCount * 3 + j * 3) = s.agents[a].mean_joints.row(j).transpose();
  return {track.clip_id, FeatureKind::joints3d, v};
}

}  // namespace sociopose
