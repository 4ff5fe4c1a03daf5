#pragma once

// Stage drivers behind the CLI subcommands. Each stage reads config-referenced
// inputs, writes its outputs under paths.out_dir, and records both in the run
// manifest. All joins are keyed on clip ids; sample order is always the
// lexicographic id order within each split, so input row order never matters.

#include <algorithm>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "sociopose/common.hpp"
#include "sociopose/config.hpp"
#include "sociopose/geometry.hpp"
#include "sociopose/grouped.hpp"
#include "sociopose/io.hpp"
#include "sociopose/manifest.hpp"
#include "sociopose/ridge.hpp"
#include "sociopose/srp.hpp"
#include "sociopose/stats.hpp"
#include "sociopose/synth.hpp"

namespace sociopose {

namespace detail {

inline void record_stage(const RunConfig& cfg, const std::string& stage,
                         const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs) {
  const fs::path mpath = fs::path(cfg.paths.out_dir) / "manifest.json";
  Manifest m = Manifest::load_or_empty(mpath);
  m.config_hash = sha256_hex(config_digest_input(cfg));
  m.tool_version = kToolVersion;
  for (const auto& p : inputs) m.add_input(p);
  m.stages[stage].clear();
  for (const auto& p : outputs) m.add_output(stage, p);
  m.save(mpath);
}

inline std::string file_stem(const fs::path& p) { return p.stem().string(); }

inline std::string serialize_gamma(const Eigen::VectorXd& gamma) {
  std::string out;
  for (Eigen::Index g = 0; g < gamma.size(); ++g) {
    if (g) out += ';';
    out += "g" + std::to_string(g) + ":" + dtos(gamma[g]);
  }
  return out;
}

}  // namespace detail

// ---------------------------------------------------------------- synth

struct SynthOutputs {
  fs::path joints, translations, ratings, targets, track_json;
};

inline SynthOutputs cmd_synth(const RunConfig& cfg, bool also_json = false) {
  const fs::path out_dir = cfg.paths.out_dir;
  const auto clips = gen_scene(cfg.synth);
  std::vector<JointTrack> tracks;
  tracks.reserve(clips.size());
  for (const auto& c : clips) tracks.push_back(c.track);

  SynthOutputs out;
  out.joints = out_dir / "joints.csv";
  out.translations = out_dir / "translations.csv";
  out.ratings = out_dir / "ratings.csv";
  out.targets = out_dir / "analytic_targets.csv";
  write_tracks_csv(tracks, out.joints, out.translations);
  write_ratings_csv(out.ratings, targets_as_ratings(clips));
  write_targets_csv(out.targets, clips);
  std::vector<fs::path> written = {out.joints, out.translations, out.ratings, out.targets};
  if (also_json) {
    out.track_json = out_dir / "tracks.json";
    write_tracks_json(tracks, out.track_json);
    written.push_back(out.track_json);
  }
  detail::record_stage(cfg, "synth", {}, written);
  return out;
}

// ---------------------------------------------------------------- features

struct FeaturesOutputs {
  fs::path joints3d, social3d, social2d, rejections;
  int n_clips = 0;
  int n_rejected = 0;
};

inline FeaturesOutputs cmd_features(const RunConfig& cfg) {
  std::vector<JointTrack> tracks;
  std::vector<fs::path> inputs;
  if (!cfg.paths.track_json.empty()) {
    tracks = read_tracks_json(cfg.paths.track_json);
    inputs = {cfg.paths.track_json};
  } else {
    if (cfg.paths.joints.empty() || cfg.paths.translations.empty())
      throw ConfigError("features: set paths.joints and paths.translations (or paths.track_json)");
    tracks = read_tracks_csv(cfg.paths.joints, cfg.paths.translations);
    inputs = {cfg.paths.joints, cfg.paths.translations};
  }
  std::sort(tracks.begin(), tracks.end(),
            [](const JointTrack& a, const JointTrack& b) { return a.clip_id < b.clip_id; });
  for (std::size_t i = 1; i < tracks.size(); ++i)
    if (tracks[i].clip_id == tracks[i - 1].clip_id)
      throw DataError("features: duplicate clip id '" + tracks[i].clip_id + "'");

  std::vector<ClipFeature> joints3d, social3d, social2d;
  std::vector<std::pair<std::string, std::string>> rejections;
  for (const auto& track : tracks) {
    try {
      // a clip is kept only if every feature kind extracts, so outputs stay aligned
      ClipFeature s3 = clip_social_pose_3d(track, cfg.joint_map, cfg.features);
      ClipFeature j3 = clip_joint_feature(track, cfg.joint_map, cfg.features);
      ClipFeature s2 = project_2d(s3);
      social3d.push_back(std::move(s3));
      joints3d.push_back(std::move(j3));
      social2d.push_back(std::move(s2));
    } catch (const DataError& e) {
      rejections.emplace_back(track.clip_id, e.what());
    }
  }

  const fs::path out_dir = cfg.paths.out_dir;
  FeaturesOutputs out;
  out.joints3d = out_dir / "joints3d.csv";
  out.social3d = out_dir / "social3d.csv";
  out.social2d = out_dir / "social2d.csv";
  out.rejections = out_dir / "rejections.csv";
  out.n_clips = static_cast<int>(tracks.size());
  out.n_rejected = static_cast<int>(rejections.size());
  write_features_csv(out.joints3d, joints3d);
  write_features_csv(out.social3d, social3d);
  write_features_csv(out.social2d, social2d);
  {
    auto rej = open_output(out.rejections);
    rej << "clip_id,reason\n";
    for (const auto& [id, reason] : rejections) {
      std::string clean = reason;
      std::replace(clean.begin(), clean.end(), ',', ';');
      rej << id << ',' << clean << "\n";
    }
  }
  if (!rejections.empty())
    log_notice("features: rejected " + std::to_string(rejections.size()) + " of " +
               std::to_string(tracks.size()) + " clips (see rejections.csv)");
  detail::record_stage(cfg, "features", inputs, {out.joints3d, out.social3d, out.social2d, out.rejections});
  return out;
}

// ---------------------------------------------------------------- encode

struct EncodeOptions {
  std::vector<fs::path> feature_files;  // mode A: one feature set per file
  fs::path embeddings_dir;              // mode B: <model>/<layer>.fmx tree
  fs::path target_features;             // mode C: multi-column target table...
  fs::path layer_choices;               // ...scored at pre-selected layers
  std::string label = "scores";
};

struct EncodeOutputs {
  fs::path scores;
  fs::path cv_selection;
  std::vector<ScoreRow> rows;
};

namespace detail {

struct AlignedFeatures {
  Eigen::MatrixXd train, test;
};

inline AlignedFeatures align_and_reduce(const FeatureTable& table, const SplitView& split,
                                        const RunConfig& cfg, const std::string& source) {
  AlignedFeatures a;
  a.train = gather_rows(table, split.train_ids, source);
  a.test = gather_rows(table, split.test_ids, source);
  if (a.train.cols() > cfg.srp.target_dim) {
    const SRPMatrix P = build_srp(static_cast<int>(a.train.cols()), cfg.srp);
    a.train = apply_srp(a.train, P);
    a.test = apply_srp(a.test, P);
    log_notice(source + ": projected " + std::to_string(P.d_in) + " -> " +
               std::to_string(P.d_out) + " dims (SRP)");
  }
  return a;
}

struct SelectionRow {
  std::string feature_set, layer, rating_dim;
  double alpha = 0.0;
  double mean_r = 0.0;
  std::string gamma;
};

inline void write_selection_csv(const fs::path& path, const std::vector<SelectionRow>& rows,
                                bool with_gamma = false) {
  auto out = open_output(path);
  out << "feature_set,layer,rating_dim,alpha,mean_val_r";
  if (with_gamma) out << ",gamma";
  out << "\n";
  for (const auto& r : rows) {
    out << r.feature_set << ',' << r.layer << ',' << r.rating_dim << ',' << dtos(r.alpha) << ','
        << dtos(r.mean_r);
    if (with_gamma) out << ',' << r.gamma;
    out << "\n";
  }
}

}  // namespace detail

inline EncodeOutputs cmd_encode(const RunConfig& cfg, const EncodeOptions& opts) {
  if (cfg.paths.ratings.empty()) throw ConfigError("encode: paths.ratings is not set");
  if (opts.feature_files.empty() == opts.embeddings_dir.empty())
    throw ConfigError("encode: give either feature files or an embeddings directory");
  if (opts.target_features.empty() != opts.layer_choices.empty())
    throw ConfigError("encode: --target-features and --layer-choices go together");

  const RatingTable ratings = read_ratings_csv(cfg.paths.ratings);
  const SplitView split = split_ratings(ratings);
  if (split.train_ids.empty() || split.test_ids.empty())
    throw DataError("encode: ratings must contain both train and test rows");

  std::vector<fs::path> inputs = {cfg.paths.ratings};
  std::vector<ScoreRow> rows;
  std::vector<detail::SelectionRow> selections;

  if (!opts.target_features.empty()) {
    // mode C: score pre-selected layers against a multi-column target table
    if (opts.embeddings_dir.empty())
      throw ConfigError("encode: --layer-choices requires --embeddings-dir");
    const FeatureTable targets = read_feature_table(opts.target_features);
    const Eigen::MatrixXd T_train = gather_rows(targets, split.train_ids, opts.target_features.string());
    const Eigen::MatrixXd T_test = gather_rows(targets, split.test_ids, opts.target_features.string());
    inputs.push_back(opts.target_features);
    inputs.push_back(opts.layer_choices);
    for (const auto& choice : read_scores_csv(opts.layer_choices)) {
      const fs::path layer_path = opts.embeddings_dir / choice.feature_set / (choice.layer + ".fmx");
      if (!fs::exists(layer_path))
        throw DataError("encode: layer file missing: " + layer_path.string());
      inputs.push_back(layer_path);
      const auto a = detail::align_and_reduce(read_feature_table(layer_path), split, cfg,
                                              layer_path.string());
      const auto sel = cv_alpha_shared(a.train, T_train, cfg.ridge);
      const auto ev = evaluate(a.train, T_train, a.test, T_test, sel.alpha);
      double mean_r = 0.0;
      for (const auto& pr : ev.per_dim) mean_r += pr.r;
      mean_r /= static_cast<double>(ev.per_dim.size());
      rows.push_back({choice.feature_set, choice.layer, choice.rating_dim, sel.alpha, mean_r,
                      ev.n_test, ""});
      selections.push_back({choice.feature_set, choice.layer, choice.rating_dim, sel.alpha, sel.mean_r, ""});
    }
  } else if (!opts.feature_files.empty()) {
    // mode A: each file is a single feature set, fit directly on the split
    for (const auto& file : opts.feature_files) {
      inputs.push_back(file);
      const std::string set_id = detail::file_stem(file);
      const auto a = detail::align_and_reduce(read_feature_table(file), split, cfg, file.string());
      const auto sel = cv_select({{set_id, a.train}}, split.Y_train, cfg.ridge);
      for (std::size_t d = 0; d < split.dims.size(); ++d) {
        const auto ev = evaluate(a.train, split.Y_train.col(static_cast<Eigen::Index>(d)), a.test,
                                 split.Y_test.col(static_cast<Eigen::Index>(d)), sel[d].alpha);
        rows.push_back({set_id, "", split.dims[d], sel[d].alpha, ev.per_dim[0].r, ev.n_test, ""});
        selections.push_back({set_id, "", split.dims[d], sel[d].alpha, sel[d].mean_r, ""});
      }
    }
  } else {
    // mode B: layer selection per model directory
    if (!fs::is_directory(opts.embeddings_dir))
      throw DataError("encode: embeddings dir not found: " + opts.embeddings_dir.string());
    std::vector<fs::path> model_dirs;
    for (const auto& e : fs::directory_iterator(opts.embeddings_dir))
      if (e.is_directory()) model_dirs.push_back(e.path());
    std::sort(model_dirs.begin(), model_dirs.end());
    if (model_dirs.empty())
      throw DataError("encode: no model subdirectories under " + opts.embeddings_dir.string());
    for (const auto& model_dir : model_dirs) {
      std::vector<fs::path> layer_files;
      for (const auto& e : fs::directory_iterator(model_dir))
        if (e.path().extension() == ".fmx") layer_files.push_back(e.path());
      std::sort(layer_files.begin(), layer_files.end());  // lexicographic tie-break order
      if (layer_files.empty())
        throw DataError("encode: no .fmx layers under " + model_dir.string());
      const std::string model = detail::file_stem(model_dir);
      std::vector<Layer> layers;
      std::map<std::string, detail::AlignedFeatures> aligned;
      for (const auto& lf : layer_files) {
        inputs.push_back(lf);
        const std::string layer_id = detail::file_stem(lf);
        auto a = detail::align_and_reduce(read_feature_table(lf), split, cfg, lf.string());
        layers.push_back({layer_id, a.train});
        aligned[layer_id] = std::move(a);
      }
      const auto sel = cv_select(layers, split.Y_train, cfg.ridge);
      for (std::size_t d = 0; d < split.dims.size(); ++d) {
        const auto& a = aligned.at(sel[d].layer_id);
        const auto ev = evaluate(a.train, split.Y_train.col(static_cast<Eigen::Index>(d)), a.test,
                                 split.Y_test.col(static_cast<Eigen::Index>(d)), sel[d].alpha);
        rows.push_back({model, sel[d].layer_id, split.dims[d], sel[d].alpha, ev.per_dim[0].r,
                        ev.n_test, ""});
        selections.push_back({model, sel[d].layer_id, split.dims[d], sel[d].alpha, sel[d].mean_r, ""});
      }
    }
  }

  const fs::path out_dir = cfg.paths.out_dir;
  EncodeOutputs out;
  out.scores = out_dir / ("scores_" + opts.label + ".csv");
  out.cv_selection = out_dir / ("cv_selection_" + opts.label + ".csv");
  out.rows = rows;
  write_scores_csv(out.scores, rows);
  detail::write_selection_csv(out.cv_selection, selections);
  detail::record_stage(cfg, "encode:" + opts.label, inputs, {out.scores, out.cv_selection});
  return out;
}

// ---------------------------------------------------------------- encode-grouped

// feature_set_override names the emitted rows (useful to align paired tests
// against a per-model baseline); default is the joined group stems.
inline EncodeOutputs cmd_encode_grouped(const RunConfig& cfg, const std::vector<fs::path>& feature_files,
                                        const std::string& label = "grouped",
                                        const std::string& feature_set_override = {}) {
  if (feature_files.size() < 2) throw ConfigError("encode-grouped: need at least 2 feature files");
  if (cfg.paths.ratings.empty()) throw ConfigError("encode-grouped: paths.ratings is not set");
  const SplitView split = split_ratings(read_ratings_csv(cfg.paths.ratings));
  if (split.train_ids.empty() || split.test_ids.empty())
    throw DataError("encode-grouped: ratings must contain both train and test rows");

  std::vector<fs::path> inputs = {cfg.paths.ratings};
  GroupSpec spec;
  std::vector<Eigen::MatrixXd> test_mats;
  std::string set_id;
  for (const auto& file : feature_files) {
    inputs.push_back(file);
    const auto a = detail::align_and_reduce(read_feature_table(file), split, cfg, file.string());
    spec.ids.push_back(detail::file_stem(file));
    spec.mats.push_back(a.train);
    test_mats.push_back(a.test);
    set_id += (set_id.empty() ? "" : "+") + detail::file_stem(file);
  }
  if (!feature_set_override.empty()) set_id = feature_set_override;

  const auto res = grouped_search(spec, split.Y_train, cfg.grouped);
  std::vector<ScoreRow> rows;
  std::vector<detail::SelectionRow> selections;
  for (std::size_t d = 0; d < split.dims.size(); ++d) {
    const auto& sel = res.per_dim[d];
    const auto scores =
        grouped_evaluate(res.models[d], test_mats, split.Y_test.col(static_cast<Eigen::Index>(d)));
    const std::string gamma = detail::serialize_gamma(sel.gamma);
    rows.push_back({set_id, "", split.dims[d], sel.alpha, scores[0].r,
                    static_cast<int>(split.test_ids.size()), gamma});
    selections.push_back({set_id, "", split.dims[d], sel.alpha, sel.mean_r, gamma});
  }

  const fs::path out_dir = cfg.paths.out_dir;
  EncodeOutputs out;
  out.scores = out_dir / ("scores_" + label + ".csv");
  out.cv_selection = out_dir / ("cv_selection_" + label + ".csv");
  out.rows = rows;
  write_scores_csv(out.scores, rows, /*with_gamma=*/true);
  detail::write_selection_csv(out.cv_selection, selections, /*with_gamma=*/true);
  detail::record_stage(cfg, "encode-grouped:" + label, inputs, {out.scores, out.cv_selection});
  return out;
}

// ---------------------------------------------------------------- semipartial

enum class SemiPartialMode { social_slices, whole };

inline fs::path cmd_semipartial(const RunConfig& cfg, const fs::path& control_file,
                                const fs::path& full_file,
                                SemiPartialMode mode = SemiPartialMode::social_slices) {
  if (cfg.paths.ratings.empty()) throw ConfigError("semipartial: paths.ratings is not set");
  const SplitView split = split_ratings(read_ratings_csv(cfg.paths.ratings));
  const FeatureTable control = read_feature_table(control_file);
  const FeatureTable full = read_feature_table(full_file);
  const Eigen::MatrixXd Xc_tr = gather_rows(control, split.train_ids, control_file.string());
  const Eigen::MatrixXd Xc_te = gather_rows(control, split.test_ids, control_file.string());
  const Eigen::MatrixXd Xf_tr = gather_rows(full, split.train_ids, full_file.string());
  const Eigen::MatrixXd Xf_te = gather_rows(full, split.test_ids, full_file.string());

  struct ControlSet {
    std::string id;
    std::vector<int> cols;  // empty = all columns
  };
  std::vector<ControlSet> sets;
  if (mode == SemiPartialMode::social_slices) {
    if (Xc_tr.cols() != 12)
      throw ConfigError("semipartial: social-slices mode expects a 12-column social3d control, got " +
                        std::to_string(Xc_tr.cols()));
    sets = {{"positions", {0, 1, 2, 6, 7, 8}},
            {"directions", {3, 4, 5, 9, 10, 11}},
            {"combined", {0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11}}};
  } else {
    sets = {{detail::file_stem(control_file), {}}};
  }

  auto slice_cols = [](const Eigen::MatrixXd& X, const std::vector<int>& cols) {
    if (cols.empty()) return X;
    Eigen::MatrixXd out(X.rows(), static_cast<Eigen::Index>(cols.size()));
    for (std::size_t j = 0; j < cols.size(); ++j) out.col(static_cast<Eigen::Index>(j)) = X.col(cols[j]);
    return out;
  };

  const fs::path out_path = fs::path(cfg.paths.out_dir) / "semipartial.csv";
  auto out = open_output(out_path);
  out << "control,rating_dim,r_semi,alpha_residualizer,alpha_predictor,degenerate\n";
  for (const auto& set : sets) {
    const auto res = semipartial(slice_cols(Xc_tr, set.cols), slice_cols(Xc_te, set.cols), Xf_tr,
                                 Xf_te, split.Y_train, split.Y_test, cfg.ridge, set.id);
    for (std::size_t d = 0; d < split.dims.size(); ++d)
      out << set.id << ',' << split.dims[d] << ',' << dtos(res.r_semi[d]) << ','
          << dtos(res.alpha_residualizer) << ',' << dtos(res.alpha_predictor[d]) << ','
          << (res.degenerate[d] ? 1 : 0) << "\n";
  }
  out.close();
  detail::record_stage(cfg, "semipartial", {cfg.paths.ratings, control_file, full_file}, {out_path});
  return out_path;
}

// ---------------------------------------------------------------- permtest

enum class PermTestMode { unpaired, paired };

inline fs::path cmd_permtest(const RunConfig& cfg, PermTestMode mode, const fs::path& file_a,
                             const fs::path& file_b, int n_perm = 5000,
                             const std::string& out_name = "permtest.csv") {
  const auto rows_a = read_scores_csv(file_a);
  const auto rows_b = read_scores_csv(file_b);
  std::set<std::string> dims;
  for (const auto& r : rows_a) dims.insert(r.rating_dim);
  for (const auto& r : rows_b) dims.insert(r.rating_dim);

  const fs::path out_path = fs::path(cfg.paths.out_dir) / out_name;
  auto out = open_output(out_path);
  out << "test,observed,p,n_perm,seed,exhaustive\n";
  for (const auto& dim : dims) {
    PermTestResult res;
    std::string name;
    const std::uint64_t seed = derive_seed(cfg.seed, "permtest", fnv1a(dim));
    if (mode == PermTestMode::unpaired) {
      std::vector<double> a, b;
      for (const auto& r : rows_a)
        if (r.rating_dim == dim) a.push_back(r.r_test);
      for (const auto& r : rows_b)
        if (r.rating_dim == dim) b.push_back(r.r_test);
      if (a.empty() || b.empty())
        throw DataError("permtest: rating dim '" + dim + "' missing from one input");
      res = perm_test_unpaired(a, b, n_perm, seed);
      name = "unpaired:" + dim;
    } else {
      std::map<std::string, double> a, b;
      for (const auto& r : rows_a)
        if (r.rating_dim == dim) a[r.feature_set] = r.r_test;
      for (const auto& r : rows_b)
        if (r.rating_dim == dim) b[r.feature_set] = r.r_test;
      std::vector<double> diffs;
      if (a.size() == 1 && b.size() == 1) {
        // single model per side: pair directly, names need not match
        diffs.push_back(a.begin()->second - b.begin()->second);
      } else {
        std::vector<std::string> unmatched;
        for (const auto& [id, _] : a)
          if (!b.count(id)) unmatched.push_back(id + " (only in " + file_a.filename().string() + ")");
        for (const auto& [id, _] : b)
          if (!a.count(id)) unmatched.push_back(id + " (only in " + file_b.filename().string() + ")");
        if (!unmatched.empty())
          throw DataError("permtest paired: unmatched model ids: " + join_capped(unmatched));
        for (const auto& [id, va] : a) diffs.push_back(va - b.at(id));
      }
      res = perm_test_paired(diffs, n_perm, seed);
      name = "paired:" + dim;
    }
    out << name << ',' << dtos(res.observed) << ',' << dtos(res.p_value) << ','
        << res.n_permutations << ',' << res.seed << ',' << (res.exhaustive ? 1 : 0) << "\n";
  }
  out.close();
  detail::record_stage(cfg, "permtest", {file_a, file_b}, {out_path});
  return out_path;
}

// ---------------------------------------------------------------- reliability

inline fs::path cmd_reliability(const RunConfig& cfg, const fs::path& raters_file, int n_splits = 100,
                                bool spearman_brown = true) {
  const RaterTable table = read_raters_csv(raters_file);
  const fs::path out_path = fs::path(cfg.paths.out_dir) / "reliability.csv";
  auto out = open_output(out_path);
  out << "rating_dim,r_split_half,n_splits,spearman_brown,n_clips_used,n_clips_excluded\n";
  for (std::size_t d = 0; d < table.dims.size(); ++d) {
    const auto res = split_half_reliability(table.per_dim[d], n_splits,
                                            derive_seed(cfg.seed, "reliability", fnv1a(table.dims[d])),
                                            spearman_brown);
    if (res.n_clips_excluded > 0)
      log_notice("reliability: " + table.dims[d] + ": excluded " +
                 std::to_string(res.n_clips_excluded) + " clips with < 2 ratings");
    out << table.dims[d] << ',' << dtos(res.r_split_half) << ',' << res.n_splits << ','
        << (res.spearman_brown ? 1 : 0) << ',' << res.n_clips_used << ',' << res.n_clips_excluded
        << "\n";
  }
  out.close();
  detail::record_stage(cfg, "reliability", {raters_file}, {out_path});
  return out_path;
}

// ---------------------------------------------------------------- report

struct ReportOptions {
  std::vector<fs::path> scores_files;  // bar chart classes
  fs::path x_scores, y_scores;         // scatter inputs (both or none)
  fs::path reliability;                // optional reliability bars
};

struct ReportOutputs {
  fs::path bars, scatter;
};

inline ReportOutputs cmd_report(const RunConfig& cfg, const ReportOptions& opts) {
  if (opts.scores_files.empty() && opts.x_scores.empty())
    throw ConfigError("report: nothing to report; give --scores and/or --x/--y");
  if (opts.x_scores.empty() != opts.y_scores.empty())
    throw ConfigError("report: --x and --y go together");
  for (const auto& f : opts.scores_files)
    if (!fs::exists(f))
      throw DataError("report: missing " + f.string() + "; run `sociopose encode` first");

  const fs::path out_dir = cfg.paths.out_dir;
  ReportOutputs out;
  std::vector<fs::path> inputs;
  std::vector<fs::path> outputs;

  if (!opts.scores_files.empty()) {
    out.bars = out_dir / "report_bars.csv";
    auto bars = open_output(out.bars);
    bars << "kind,class,feature_set,layer,rating_dim,value\n";
    bool any_rows = false;
    for (const auto& file : opts.scores_files) {
      inputs.push_back(file);
      const auto rows = read_scores_csv(file);
      const std::string cls = detail::file_stem(file);
      std::map<std::string, std::pair<double, int>> per_dim;  // dim -> (sum, count)
      for (const auto& r : rows) {
        bars << "dot," << cls << ',' << r.feature_set << ',' << r.layer << ',' << r.rating_dim
             << ',' << dtos(r.r_test) << "\n";
        auto& acc = per_dim[r.rating_dim];
        acc.first += r.r_test;
        ++acc.second;
        any_rows = true;
      }
      for (const auto& [dim, acc] : per_dim)
        bars << "bar," << cls << ",,," << dim << ',' << dtos(acc.first / acc.second) << "\n";
    }
    if (!opts.reliability.empty()) {
      inputs.push_back(opts.reliability);
      for (const auto& line : read_lines(opts.reliability)) {
        const auto c = split(line, ',');
        if (c.size() < 2 || trim(c[0]) == "rating_dim" || trim(line).empty()) continue;
        bars << "reliability,,,," << std::string(trim(c[0])) << ',' << std::string(trim(c[1])) << "\n";
      }
    }
    if (!any_rows) log_notice("report: no score rows found; bar output is header-only");
    outputs.push_back(out.bars);
  }

  if (!opts.x_scores.empty()) {
    for (const auto& f : {opts.x_scores, opts.y_scores})
      if (!fs::exists(f)) throw DataError("report: missing " + f.string() + "; run `sociopose encode` first");
    inputs.push_back(opts.x_scores);
    inputs.push_back(opts.y_scores);
    out.scatter = out_dir / "report_scatter.csv";
    auto sc = open_output(out.scatter);
    sc << "kind,feature_set,rating_dim,x,y\n";
    const auto xs = read_scores_csv(opts.x_scores);
    const auto ys = read_scores_csv(opts.y_scores);
    std::map<std::pair<std::string, std::string>, double> ymap;
    for (const auto& r : ys) ymap[{r.feature_set, r.rating_dim}] = r.r_test;
    std::map<std::string, std::vector<std::pair<double, double>>> per_dim_pairs;
    bool any_points = false;
    for (const auto& r : xs) {
      const auto it = ymap.find({r.feature_set, r.rating_dim});
      if (it == ymap.end()) continue;
      sc << "point," << r.feature_set << ',' << r.rating_dim << ',' << dtos(r.r_test) << ','
         << dtos(it->second) << "\n";
      per_dim_pairs[r.rating_dim].emplace_back(r.r_test, it->second);
      any_points = true;
    }
    for (const auto& [dim, pairs] : per_dim_pairs) {
      if (pairs.size() < 2) {
        log_notice("report: dim '" + dim + "' has fewer than 2 scatter pairs; no r footer");
        continue;
      }
      sc << "r,," << dim << ',' << dtos(score_relationship(pairs)) << ",\n";
    }
    if (!any_points) log_notice("report: no matching (feature_set, rating_dim) pairs for scatter");
    outputs.push_back(out.scatter);
  }

  detail::record_stage(cfg, "report", inputs, outputs);
  return out;
}

}  // namespace sociopose
