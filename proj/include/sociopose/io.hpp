#pragma once

// File formats. CSV is the interchange format for small data; the .fmx binary
// container holds wide embedding matrices (magic "FMX1", little-endian u32 row
// and column counts, row-major float32) with clip ids in a row-aligned
// <name>.ids sidecar. All numeric CSV output uses shortest round-trip decimal
// formatting. Parsers report 1-based line numbers on malformed rows.

#include <Eigen/Core>
#include <array>
#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <vector>

// the .fmx container is little-endian on disk and read/written by memcpy
static_assert(std::endian::native == std::endian::little,
              "fmx reader/writer needs byte swapping on big-endian hosts");

#include <nlohmann/json.hpp>

#include "sociopose/common.hpp"
#include "sociopose/geometry.hpp"
#include "sociopose/synth.hpp"

namespace sociopose {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- primitives

inline std::ifstream open_input(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  return in;
}

inline std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  return out;
}

inline std::vector<std::string> read_lines(const fs::path& path) {
  auto in = open_input(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

namespace detail {

[[noreturn]] inline void row_error(const fs::path& path, std::size_t line_no, const std::string& what) {
  throw DataError(path.string() + ":" + std::to_string(line_no) + ": " + what);
}

inline void expect_header(const fs::path& path, const std::vector<std::string>& lines,
                          const std::string& header) {
  if (lines.empty()) row_error(path, 1, "empty file, expected header '" + header + "'");
  if (std::string(trim(lines[0])) != header)
    row_error(path, 1, "expected header '" + header + "', got '" + lines[0] + "'");
}

}  // namespace detail

// ---------------------------------------------------------------- feature table

struct FeatureTable {
  std::vector<std::string> ids;
  Eigen::MatrixXd values;  // ids.size() x d

  Eigen::Index n_rows() const { return values.rows(); }
  Eigen::Index n_cols() const { return values.cols(); }
};

inline void write_features_csv(const fs::path& path, const FeatureTable& table) {
  auto out = open_output(path);
  out << "clip_id";
  for (Eigen::Index j = 0; j < table.values.cols(); ++j) out << ",f" << j;
  out << "\n";
  for (std::size_t i = 0; i < table.ids.size(); ++i) {
    out << table.ids[i];
    for (Eigen::Index j = 0; j < table.values.cols(); ++j)
      out << ',' << dtos(table.values(static_cast<Eigen::Index>(i), j));
    out << "\n";
  }
}

inline void write_features_csv(const fs::path& path, const std::vector<ClipFeature>& feats) {
  FeatureTable t;
  if (!feats.empty()) {
    t.values.resize(static_cast<Eigen::Index>(feats.size()), feats.front().values.size());
    for (std::size_t i = 0; i < feats.size(); ++i) {
      t.ids.push_back(feats[i].clip_id);
      t.values.row(static_cast<Eigen::Index>(i)) = feats[i].values.transpose();
    }
  }
  write_features_csv(path, t);
}

inline FeatureTable read_features_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) detail::row_error(path, 1, "empty feature file");
  const auto header = split(lines[0], ',');
  if (header.empty() || trim(header[0]) != "clip_id")
    detail::row_error(path, 1, "feature header must start with clip_id");
  const std::size_t width = header.size() - 1;
  FeatureTable t;
  t.values.resize(static_cast<Eigen::Index>(lines.size()) - 1, static_cast<Eigen::Index>(width));
  Eigen::Index row = 0;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto cells = split(lines[i], ',');
    if (cells.size() != width + 1)
      detail::row_error(path, i + 1, "expected " + std::to_string(width + 1) + " cells, got " +
                                         std::to_string(cells.size()));
    t.ids.emplace_back(trim(cells[0]));
    for (std::size_t j = 0; j < width; ++j) {
      try {
        t.values(row, static_cast<Eigen::Index>(j)) = parse_double(trim(cells[j + 1]));
      } catch (const DataError& e) {
        detail::row_error(path, i + 1, e.what());
      }
    }
    ++row;
  }
  t.values.conservativeResize(row, Eigen::NoChange);
  return t;
}

// ---------------------------------------------------------------- fmx container

inline fs::path ids_sidecar(const fs::path& fmx_path) {
  fs::path p = fmx_path;
  p.replace_extension(".ids");
  return p;
}

inline void write_fmx(const fs::path& path, const FeatureTable& table) {
  auto out = open_output(path);
  out.write("FMX1", 4);
  const std::uint32_t rows = static_cast<std::uint32_t>(table.values.rows());
  const std::uint32_t cols = static_cast<std::uint32_t>(table.values.cols());
  out.write(reinterpret_cast<const char*>(&rows), 4);
  out.write(reinterpret_cast<const char*>(&cols), 4);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      const float v = static_cast<float>(table.values(i, j));
      out.write(reinterpret_cast<const char*>(&v), 4);
    }
  auto ids = open_output(ids_sidecar(path));
  for (const auto& id : table.ids) ids << id << "\n";
}

inline FeatureTable read_fmx(const fs::path& path) {
  auto in = open_input(path);
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::string(magic, 4) != "FMX1")
    throw DataError(path.string() + ": bad magic, expected FMX1");
  std::uint32_t rows = 0, cols = 0;
  in.read(reinterpret_cast<char*>(&rows), 4);
  in.read(reinterpret_cast<char*>(&cols), 4);
  if (!in) throw DataError(path.string() + ": truncated header");
  FeatureTable t;
  t.values.resize(rows, cols);
  for (std::uint32_t i = 0; i < rows; ++i)
    for (std::uint32_t j = 0; j < cols; ++j) {
      float v = 0.f;
      in.read(reinterpret_cast<char*>(&v), 4);
      if (!in) throw DataError(path.string() + ": truncated payload at row " + std::to_string(i));
      t.values(i, j) = static_cast<double>(v);
    }
  for (auto& line : read_lines(ids_sidecar(path))) {
    if (!std::string(trim(line)).empty()) t.ids.emplace_back(trim(line));
  }
  if (t.ids.size() != rows)
    throw DataError(path.string() + ": ids sidecar has " + std::to_string(t.ids.size()) +
                    " ids for " + std::to_string(rows) + " rows");
  return t;
}

// CSV or fmx by extension.
inline FeatureTable read_feature_table(const fs::path& path) {
  return path.extension() == ".fmx" ? read_fmx(path) : read_features_csv(path);
}

// ---------------------------------------------------------------- joint tracks

namespace detail {

struct AgentBuild {
  JointSet joints = JointSet::Zero();
  std::array<bool, kJointCount> seen{};
  bool has_translation = false;
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();
  double bev_depth = 0.0;
};

using TrackBuild = std::map<std::string, std::map<long, std::array<AgentBuild, 2>>>;

inline int parse_agent(const fs::path& path, std::size_t line_no, std::string_view cell) {
  const long a = parse_long(trim(cell));
  if (a != 0 && a != 1) row_error(path, line_no, "agent must be 0 or 1, got " + std::to_string(a));
  return static_cast<int>(a);
}

inline std::vector<JointTrack> finish_tracks(const TrackBuild& build, const fs::path& joints_path,
                                             const fs::path& trans_path) {
  std::vector<JointTrack> tracks;
  for (const auto& [clip_id, frames] : build) {
    JointTrack track;
    track.clip_id = clip_id;
    for (const auto& [frame_no, agents] : frames) {
      for (int a = 0; a < 2; ++a) {
        const auto& ab = agents[static_cast<std::size_t>(a)];
        for (int j = 0; j < kJointCount; ++j)
          if (!ab.seen[static_cast<std::size_t>(j)])
            throw DataError(joints_path.string() + ": clip " + clip_id + " frame " +
                            std::to_string(frame_no) + " agent " + std::to_string(a) +
                            " missing joint " + std::to_string(j));
        if (!ab.has_translation)
          throw DataError(trans_path.string() + ": clip " + clip_id + " frame " +
                          std::to_string(frame_no) + " agent " + std::to_string(a) +
                          " has no translation row");
      }
      std::array<AgentFrame, 2> fr;
      for (int a = 0; a < 2; ++a) {
        const auto& ab = agents[static_cast<std::size_t>(a)];
        fr[static_cast<std::size_t>(a)] = {ab.joints, ab.translation, ab.bev_depth};
      }
      track.frames.push_back(fr);
    }
    tracks.push_back(std::move(track));
  }
  return tracks;
}

}  // namespace detail

inline std::vector<JointTrack> read_tracks_csv(const fs::path& joints_path,
                                               const fs::path& trans_path) {
  detail::TrackBuild build;
  {
    const auto lines = read_lines(joints_path);
    detail::expect_header(joints_path, lines, "clip_id,frame,agent,joint,x,y,z");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto c = split(lines[i], ',');
      if (c.size() != 7) detail::row_error(joints_path, i + 1, "expected 7 cells");
      try {
        const std::string clip(trim(c[0]));
        const long frame = parse_long(trim(c[1]));
        const int agent = detail::parse_agent(joints_path, i + 1, c[2]);
        const long joint = parse_long(trim(c[3]));
        if (joint < 0 || joint >= kJointCount)
          detail::row_error(joints_path, i + 1, "joint index " + std::to_string(joint) + " outside [0,45)");
        auto& ab = build[clip][frame][static_cast<std::size_t>(agent)];
        if (ab.seen[static_cast<std::size_t>(joint)])
          detail::row_error(joints_path, i + 1, "duplicate joint row");
        ab.seen[static_cast<std::size_t>(joint)] = true;
        ab.joints.row(joint) << parse_double(trim(c[4])), parse_double(trim(c[5])), parse_double(trim(c[6]));
      } catch (const DataError& e) {
        if (std::string(e.what()).find(joints_path.string()) == 0) throw;
        detail::row_error(joints_path, i + 1, e.what());
      }
    }
  }
  {
    const auto lines = read_lines(trans_path);
    detail::expect_header(trans_path, lines, "clip_id,frame,agent,tx,ty,tz,bev_depth");
    for (std::size_t i = 1; i < lines.size(); ++i) {
      if (trim(lines[i]).empty()) continue;
      const auto c = split(lines[i], ',');
      if (c.size() != 7) detail::row_error(trans_path, i + 1, "expected 7 cells");
      try {
        const std::string clip(trim(c[0]));
        const long frame = parse_long(trim(c[1]));
        const int agent = detail::parse_agent(trans_path, i + 1, c[2]);
        auto clip_it = build.find(clip);
        if (clip_it == build.end())
          detail::row_error(trans_path, i + 1, "clip " + clip + " has translations but no joints");
        auto frame_it = clip_it->second.find(frame);
        if (frame_it == clip_it->second.end())
          detail::row_error(trans_path, i + 1, "frame " + std::to_string(frame) + " has translations but no joints");
        auto& ab = frame_it->second[static_cast<std::size_t>(agent)];
        if (ab.has_translation) detail::row_error(trans_path, i + 1, "duplicate translation row");
        ab.has_translation = true;
        ab.translation << parse_double(trim(c[3])), parse_double(trim(c[4])), parse_double(trim(c[5]));
        ab.bev_depth = parse_double(trim(c[6]));
      } catch (const DataError& e) {
        if (std::string(e.what()).find(trans_path.string()) == 0) throw;
        detail::row_error(trans_path, i + 1, e.what());
      }
    }
  }
  return detail::finish_tracks(build, joints_path, trans_path);
}

inline void write_tracks_csv(const std::vector<JointTrack>& tracks, const fs::path& joints_path,
                             const fs::path& trans_path) {
  auto jout = open_output(joints_path);
  auto tout = open_output(trans_path);
  jout << "clip_id,frame,agent,joint,x,y,z\n";
  tout << "clip_id,frame,agent,tx,ty,tz,bev_depth\n";
  for (const auto& track : tracks) {
    for (std::size_t f = 0; f < track.frames.size(); ++f) {
      for (int a = 0; a < 2; ++a) {
        const auto& agent = track.frames[f][static_cast<std::size_t>(a)];
        for (int j = 0; j < kJointCount; ++j)
          jout << track.clip_id << ',' << f << ',' << a << ',' << j << ','
               << dtos(agent.joints(j, 0)) << ',' << dtos(agent.joints(j, 1)) << ','
               << dtos(agent.joints(j, 2)) << "\n";
        tout << track.clip_id << ',' << f << ',' << a << ',' << dtos(agent.translation.x()) << ','
             << dtos(agent.translation.y()) << ',' << dtos(agent.translation.z()) << ','
             << dtos(agent.bev_depth) << "\n";
      }
    }
  }
}

// Single-file structured variant with the same fields.
inline void write_tracks_json(const std::vector<JointTrack>& tracks, const fs::path& path) {
  nlohmann::json root;
  root["clips"] = nlohmann::json::array();
  for (const auto& track : tracks) {
    nlohmann::json clip;
    clip["clip_id"] = track.clip_id;
    clip["frames"] = nlohmann::json::array();
    for (const auto& frame : track.frames) {
      nlohmann::json agents = nlohmann::json::array();
      for (int a = 0; a < 2; ++a) {
        const auto& ag = frame[static_cast<std::size_t>(a)];
        nlohmann::json j;
        auto joints = nlohmann::json::array();
        for (int k = 0; k < kJointCount; ++k)
          joints.push_back({ag.joints(k, 0), ag.joints(k, 1), ag.joints(k, 2)});
        j["joints"] = std::move(joints);
        j["translation"] = {ag.translation.x(), ag.translation.y(), ag.translation.z()};
        j["bev_depth"] = ag.bev_depth;
        agents.push_back(std::move(j));
      }
      clip["frames"].push_back({{"agents", std::move(agents)}});
    }
    root["clips"].push_back(std::move(clip));
  }
  open_output(path) << root.dump(2) << "\n";
}

inline std::vector<JointTrack> read_tracks_json(const fs::path& path) {
  nlohmann::json root;
  try {
    open_input(path) >> root;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  std::vector<JointTrack> tracks;
  try {
    for (const auto& clip : root.at("clips")) {
      JointTrack track;
      track.clip_id = clip.at("clip_id").get<std::string>();
      for (const auto& frame : clip.at("frames")) {
        const auto& agents = frame.at("agents");
        if (agents.size() != 2)
          throw DataError(path.string() + ": clip " + track.clip_id + " frame " +
                          std::to_string(track.frames.size()) + " has " +
                          std::to_string(agents.size()) + " agents, expected 2");
        std::array<AgentFrame, 2> fr;
        for (int a = 0; a < 2; ++a) {
          const auto& ag = agents[static_cast<std::size_t>(a)];
          const auto& joints = ag.at("joints");
          if (joints.size() != kJointCount)
            throw DataError(path.string() + ": clip " + track.clip_id + ": expected 45 joints, got " +
                            std::to_string(joints.size()));
          AgentFrame& af = fr[static_cast<std::size_t>(a)];
          for (int k = 0; k < kJointCount; ++k)
            af.joints.row(k) << joints[static_cast<std::size_t>(k)][0].get<double>(),
                joints[static_cast<std::size_t>(k)][1].get<double>(),
                joints[static_cast<std::size_t>(k)][2].get<double>();
          const auto& t = ag.at("translation");
          af.translation << t[0].get<double>(), t[1].get<double>(), t[2].get<double>();
          af.bev_depth = ag.at("bev_depth").get<double>();
        }
        track.frames.push_back(fr);
      }
      tracks.push_back(std::move(track));
    }
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  return tracks;
}

// ---------------------------------------------------------------- rating table

struct RatingTable {
  std::vector<std::string> ids;
  std::vector<bool> is_train;
  std::vector<std::string> dims;
  Eigen::MatrixXd values;  // n x dims
};

inline RatingTable read_ratings_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) detail::row_error(path, 1, "empty ratings file");
  const auto header = split(lines[0], ',');
  if (header.size() < 3 || trim(header[0]) != "clip_id" || trim(header[1]) != "split")
    detail::row_error(path, 1, "ratings header must be clip_id,split,<dims...>");
  RatingTable t;
  for (std::size_t j = 2; j < header.size(); ++j) t.dims.emplace_back(trim(header[j]));
  std::set<std::string> seen;
  std::vector<std::vector<double>> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto c = split(lines[i], ',');
    if (c.size() != header.size())
      detail::row_error(path, i + 1, "expected " + std::to_string(header.size()) + " cells, got " +
                                         std::to_string(c.size()));
    std::string id(trim(c[0]));
    if (!seen.insert(id).second)
      detail::row_error(path, i + 1, "duplicate clip_id '" + id + "' (train/test overlap guard)");
    const auto split_tok = trim(c[1]);
    if (split_tok != "train" && split_tok != "test")
      detail::row_error(path, i + 1, "split must be 'train' or 'test', got '" + std::string(split_tok) + "'");
    t.ids.push_back(std::move(id));
    t.is_train.push_back(split_tok == "train");
    std::vector<double> row(t.dims.size());
    for (std::size_t j = 0; j < t.dims.size(); ++j) {
      try {
        row[j] = parse_double(trim(c[j + 2]));
      } catch (const DataError& e) {
        detail::row_error(path, i + 1, e.what());
      }
    }
    rows.push_back(std::move(row));
  }
  t.values.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(t.dims.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < t.dims.size(); ++j)
      t.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return t;
}

inline void write_ratings_csv(const fs::path& path, const RatingTable& t) {
  auto out = open_output(path);
  out << "clip_id,split";
  for (const auto& d : t.dims) out << ',' << d;
  out << "\n";
  for (std::size_t i = 0; i < t.ids.size(); ++i) {
    out << t.ids[i] << ',' << (t.is_train[i] ? "train" : "test");
    for (Eigen::Index j = 0; j < t.values.cols(); ++j)
      out << ',' << dtos(t.values(static_cast<Eigen::Index>(i), j));
    out << "\n";
  }
}

// Canonical sample order: lexicographically sorted clip ids within each split.
// Row order of any input file is therefore irrelevant everywhere downstream.
struct SplitView {
  std::vector<std::string> train_ids, test_ids;  // sorted
  Eigen::MatrixXd Y_train, Y_test;
  std::vector<std::string> dims;
};

inline SplitView split_ratings(const RatingTable& t) {
  SplitView v;
  v.dims = t.dims;
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < t.ids.size(); ++i) index[t.ids[i]] = i;
  for (const auto& [id, i] : index) (t.is_train[i] ? v.train_ids : v.test_ids).push_back(id);
  auto fill = [&](const std::vector<std::string>& ids, Eigen::MatrixXd& Y) {
    Y.resize(static_cast<Eigen::Index>(ids.size()), t.values.cols());
    for (std::size_t r = 0; r < ids.size(); ++r)
      Y.row(static_cast<Eigen::Index>(r)) = t.values.row(static_cast<Eigen::Index>(index.at(ids[r])));
  };
  fill(v.train_ids, v.Y_train);
  fill(v.test_ids, v.Y_test);
  return v;
}

// Rows of `table` for `ids`, in order; missing ids are an error listing them.
inline Eigen::MatrixXd gather_rows(const FeatureTable& table, const std::vector<std::string>& ids,
                                   const std::string& source_name) {
  std::map<std::string, Eigen::Index> index;
  for (std::size_t i = 0; i < table.ids.size(); ++i)
    if (!index.emplace(table.ids[i], static_cast<Eigen::Index>(i)).second)
      throw DataError(source_name + ": duplicate clip id '" + table.ids[i] + "'");
  std::vector<std::string> missing;
  Eigen::MatrixXd out(static_cast<Eigen::Index>(ids.size()), table.values.cols());
  for (std::size_t r = 0; r < ids.size(); ++r) {
    const auto it = index.find(ids[r]);
    if (it == index.end()) {
      missing.push_back(ids[r]);
      continue;
    }
    out.row(static_cast<Eigen::Index>(r)) = table.values.row(it->second);
  }
  if (!missing.empty())
    throw DataError(source_name + ": missing clip ids: " + join_capped(missing));
  return out;
}

// ---------------------------------------------------------------- score rows

struct ScoreRow {
  std::string feature_set;
  std::string layer;
  std::string rating_dim;
  double alpha = 0.0;
  double r_test = 0.0;
  int n_test = 0;
  std::string gamma;  // "g0:..;g1:.." for grouped models, empty otherwise
};

inline void write_scores_csv(const fs::path& path, const std::vector<ScoreRow>& rows,
                             bool with_gamma = false) {
  auto out = open_output(path);
  out << "feature_set,layer,rating_dim,alpha,r_test,n_test";
  if (with_gamma) out << ",gamma";
  out << "\n";
  for (const auto& r : rows) {
    out << r.feature_set << ',' << r.layer << ',' << r.rating_dim << ',' << dtos(r.alpha) << ','
        << dtos(r.r_test) << ',' << r.n_test;
    if (with_gamma) out << ',' << r.gamma;
    out << "\n";
  }
}

inline std::vector<ScoreRow> read_scores_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) detail::row_error(path, 1, "empty scores file");
  const auto header = split(lines[0], ',');
  const bool with_gamma = header.size() == 7 && trim(header[6]) == "gamma";
  if (!(header.size() == 6 || with_gamma) || trim(header[0]) != "feature_set")
    detail::row_error(path, 1, "expected scores header feature_set,layer,rating_dim,alpha,r_test,n_test[,gamma]");
  std::vector<ScoreRow> rows;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto c = split(lines[i], ',');
    if (c.size() != header.size()) detail::row_error(path, i + 1, "wrong cell count");
    ScoreRow r;
    r.feature_set = std::string(trim(c[0]));
    r.layer = std::string(trim(c[1]));
    r.rating_dim = std::string(trim(c[2]));
    try {
      r.alpha = parse_double(trim(c[3]));
      r.r_test = parse_double(trim(c[4]));
      r.n_test = static_cast<int>(parse_long(trim(c[5])));
    } catch (const DataError& e) {
      detail::row_error(path, i + 1, e.what());
    }
    if (with_gamma) r.gamma = std::string(trim(c[6]));
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------- rater table

struct RaterTable {
  std::vector<std::string> dims;
  std::vector<std::string> clip_ids;   // sorted
  std::vector<std::string> rater_ids;  // sorted
  std::vector<Eigen::MatrixXd> per_dim;  // clips x raters, NaN = missing
};

inline RaterTable read_raters_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  detail::expect_header(path, lines, "clip_id,rater_id,rating_dim,value");
  std::set<std::string> clips, raters, dims;
  struct Entry {
    std::string clip, rater, dim;
    double value;
  };
  std::vector<Entry> entries;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    const auto c = split(lines[i], ',');
    if (c.size() != 4) detail::row_error(path, i + 1, "expected 4 cells");
    Entry e{std::string(trim(c[0])), std::string(trim(c[1])), std::string(trim(c[2])), 0.0};
    try {
      e.value = parse_double(trim(c[3]));
    } catch (const DataError& err) {
      detail::row_error(path, i + 1, err.what());
    }
    clips.insert(e.clip);
    raters.insert(e.rater);
    dims.insert(e.dim);
    entries.push_back(std::move(e));
  }
  RaterTable t;
  t.clip_ids.assign(clips.begin(), clips.end());
  t.rater_ids.assign(raters.begin(), raters.end());
  t.dims.assign(dims.begin(), dims.end());
  std::map<std::string, Eigen::Index> ci, ri, di;
  for (std::size_t i = 0; i < t.clip_ids.size(); ++i) ci[t.clip_ids[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < t.rater_ids.size(); ++i) ri[t.rater_ids[i]] = static_cast<Eigen::Index>(i);
  for (std::size_t i = 0; i < t.dims.size(); ++i) di[t.dims[i]] = static_cast<Eigen::Index>(i);
  t.per_dim.assign(t.dims.size(),
                   Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(t.clip_ids.size()),
                                             static_cast<Eigen::Index>(t.rater_ids.size()),
                                             std::numeric_limits<double>::quiet_NaN()));
  for (const auto& e : entries)
    t.per_dim[static_cast<std::size_t>(di[e.dim])](ci[e.clip], ri[e.rater]) = e.value;
  return t;
}

// ---------------------------------------------------------------- synth output

inline void write_targets_csv(const fs::path& path, const std::vector<SceneClip>& clips) {
  auto out = open_output(path);
  out << "clip_id,distance,facing,depth_gap\n";
  for (const auto& c : clips)
    out << c.clip_id << ',' << dtos(c.targets.distance) << ',' << dtos(c.targets.facing) << ','
        << dtos(c.targets.depth_gap) << "\n";
}

inline RatingTable targets_as_ratings(const std::vector<SceneClip>& clips) {
  RatingTable t;
  t.dims = {"distance", "facing", "depth_gap"};
  t.values.resize(static_cast<Eigen::Index>(clips.size()), 3);
  for (std::size_t i = 0; i < clips.size(); ++i) {
    t.ids.push_back(clips[i].clip_id);
    t.is_train.push_back(clips[i].train);
    t.values.row(static_cast<Eigen::Index>(i)) << clips[i].targets.distance, clips[i].targets.facing,
        clips[i].targets.depth_gap;
  }
  return t;
}

}  // namespace sociopose
