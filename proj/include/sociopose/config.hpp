#pragma once

// Run configuration: one JSON file with nested sections. Unknown keys are
// config errors (typo protection); serialization round-trips losslessly and
// the canonical dump is what gets hashed into the manifest.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sociopose/common.hpp"
#include "sociopose/geometry.hpp"
#include "sociopose/grouped.hpp"
#include "sociopose/ridge.hpp"
#include "sociopose/srp.hpp"
#include "sociopose/synth.hpp"

namespace sociopose {

struct RunPaths {
  std::string joints;          // per-dataset joints CSV
  std::string translations;    // companion translation/depth CSV
  std::string track_json;      // single-file variant (used when set)
  std::string embeddings_dir;  // <model>/<layer>.fmx tree
  std::string ratings;
  std::string out_dir = "out";
};

struct RunConfig {
  std::uint64_t seed = 1;
  RunPaths paths;
  JointMap joint_map;
  ExtractOptions features;
  RidgeConfig ridge;
  GroupedSearchConfig grouped;
  SRPConfig srp;
  SceneParams synth;
};

namespace detail {

inline void check_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                       const std::string& section) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed)
      if (key == a) ok = true;
    if (!ok) throw ConfigError("unknown config key '" + key + "' in " + section);
  }
}

inline nlohmann::json range_to_json(const PlacementRange& r) {
  return {{"x", {r.x_min, r.x_max}}, {"y", {r.y_min, r.y_max}}, {"z", {r.z_min, r.z_max}},
          {"yaw", {r.yaw_min, r.yaw_max}}};
}

inline PlacementRange range_from_json(const nlohmann::json& j, const std::string& section) {
  check_keys(j, {"x", "y", "z", "yaw"}, section);
  PlacementRange r;
  auto pair = [&](const char* key, double& lo, double& hi) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (!v.is_array() || v.size() != 2) throw ConfigError(section + "." + key + " must be [lo, hi]");
    lo = v[0].get<double>();
    hi = v[1].get<double>();
  };
  pair("x", r.x_min, r.x_max);
  pair("y", r.y_min, r.y_max);
  pair("z", r.z_min, r.z_max);
  pair("yaw", r.yaw_min, r.yaw_max);
  return r;
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json j;
  j["seed"] = c.seed;
  j["paths"] = {{"joints", c.paths.joints},
                {"translations", c.paths.translations},
                {"track_json", c.paths.track_json},
                {"embeddings_dir", c.paths.embeddings_dir},
                {"ratings", c.paths.ratings},
                {"out_dir", c.paths.out_dir}};
  j["joint_map"] = {{"neck", c.joint_map.neck},
                    {"nose", c.joint_map.nose},
                    {"left_eye", c.joint_map.left_eye},
                    {"right_eye", c.joint_map.right_eye}};
  j["features"] = {{"min_frame_coverage", c.features.min_frame_coverage}};
  j["ridge"] = {{"alpha_grid", c.ridge.alpha_grid},
                {"n_folds", c.ridge.n_folds},
                {"n_repeats", c.ridge.n_repeats}};
  j["grouped"] = {{"n_candidates", c.grouped.n_candidates},
                  {"concentrations", c.grouped.concentrations}};
  j["srp"] = {{"epsilon", c.srp.epsilon}, {"target_dim", c.srp.target_dim}};
  j["synth"] = {{"n_clips", c.synth.n_clips},
                {"n_frames", c.synth.n_frames},
                {"noise_sigma", c.synth.noise_sigma},
                {"train_fraction", c.synth.train_fraction},
                {"clip_prefix", c.synth.clip_prefix},
                {"agent_a", detail::range_to_json(c.synth.agent_a)},
                {"agent_b", detail::range_to_json(c.synth.agent_b)}};
  return j;
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  detail::check_keys(j, {"seed", "paths", "joint_map", "features", "ridge", "grouped", "srp", "synth"},
                     "config");
  RunConfig c;
  try {
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("paths")) {
      const auto& p = j.at("paths");
      detail::check_keys(p, {"joints", "translations", "track_json", "embeddings_dir", "ratings", "out_dir"},
                         "paths");
      c.paths.joints = p.value("joints", "");
      c.paths.translations = p.value("translations", "");
      c.paths.track_json = p.value("track_json", "");
      c.paths.embeddings_dir = p.value("embeddings_dir", "");
      c.paths.ratings = p.value("ratings", "");
      c.paths.out_dir = p.value("out_dir", "out");
    }
    if (j.contains("joint_map")) {
      const auto& m = j.at("joint_map");
      detail::check_keys(m, {"neck", "nose", "left_eye", "right_eye"}, "joint_map");
      c.joint_map.neck = m.value("neck", c.joint_map.neck);
      c.joint_map.nose = m.value("nose", c.joint_map.nose);
      c.joint_map.left_eye = m.value("left_eye", c.joint_map.left_eye);
      c.joint_map.right_eye = m.value("right_eye", c.joint_map.right_eye);
    }
    if (j.contains("features")) {
      detail::check_keys(j.at("features"), {"min_frame_coverage"}, "features");
      c.features.min_frame_coverage = j.at("features").value("min_frame_coverage", 1.0);
    }
    if (j.contains("ridge")) {
      const auto& r = j.at("ridge");
      detail::check_keys(r, {"alpha_grid", "n_folds", "n_repeats"}, "ridge");
      if (r.contains("alpha_grid")) c.ridge.alpha_grid = r.at("alpha_grid").get<std::vector<double>>();
      c.ridge.n_folds = r.value("n_folds", c.ridge.n_folds);
      c.ridge.n_repeats = r.value("n_repeats", c.ridge.n_repeats);
    }
    if (j.contains("grouped")) {
      const auto& g = j.at("grouped");
      detail::check_keys(g, {"n_candidates", "concentrations"}, "grouped");
      c.grouped.n_candidates = g.value("n_candidates", c.grouped.n_candidates);
      if (g.contains("concentrations"))
        c.grouped.concentrations = g.at("concentrations").get<std::vector<double>>();
    }
    if (j.contains("srp")) {
      const auto& s = j.at("srp");
      detail::check_keys(s, {"epsilon", "target_dim"}, "srp");
      c.srp.epsilon = s.value("epsilon", c.srp.epsilon);
      c.srp.target_dim = s.value("target_dim", c.srp.target_dim);
    }
    if (j.contains("synth")) {
      const auto& s = j.at("synth");
      detail::check_keys(s, {"n_clips", "n_frames", "noise_sigma", "train_fraction", "clip_prefix",
                             "agent_a", "agent_b"},
                         "synth");
      c.synth.n_clips = s.value("n_clips", c.synth.n_clips);
      c.synth.n_frames = s.value("n_frames", c.synth.n_frames);
      c.synth.noise_sigma = s.value("noise_sigma", c.synth.noise_sigma);
      c.synth.train_fraction = s.value("train_fraction", c.synth.train_fraction);
      c.synth.clip_prefix = s.value("clip_prefix", c.synth.clip_prefix);
      if (s.contains("agent_a")) c.synth.agent_a = detail::range_from_json(s.at("agent_a"), "synth.agent_a");
      if (s.contains("agent_b")) c.synth.agent_b = detail::range_from_json(s.at("agent_b"), "synth.agent_b");
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  // every stochastic component derives its stream from the one global seed
  c.ridge.seed = c.seed;
  c.grouped.ridge = c.ridge;
  c.srp.seed = c.seed;
  c.synth.seed = c.seed;
  return c;
}

inline RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

inline std::string config_digest_input(const RunConfig& c) { return to_json(c).dump(); }

}  // namespace sociopose
