#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <fstream>
#include <string>
#include <vector>

#include "sociopose/config.hpp"
#include "sociopose/io.hpp"
#include "sociopose/pipeline.hpp"
#include "sociopose/rng.hpp"
#include "test_util.hpp"

using namespace sociopose;
using test_util::ScratchDir;
using Catch::Approx;

namespace {

int run_cli(const std::string& args) {
  const std::string cmd = std::string(SOCIOPOSE_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

// depth-contrast scene: agent A is always leftmost and shallow, agent B deep,
// so depth_gap is a linear function of the social3d coordinates
RunConfig contrast_config(const fs::path& dir, std::uint64_t seed, int n_clips, int n_frames) {
  RunConfig cfg;
  cfg.seed = seed;
  cfg.paths.out_dir = (dir / "out").string();
  cfg.paths.joints = (dir / "out" / "joints.csv").string();
  cfg.paths.translations = (dir / "out" / "translations.csv").string();
  cfg.paths.ratings = (dir / "out" / "ratings.csv").string();
  cfg.synth.n_clips = n_clips;
  cfg.synth.n_frames = n_frames;
  cfg.synth.agent_a.x_min = -2.0;
  cfg.synth.agent_a.x_max = -0.3;
  cfg.synth.agent_a.z_min = 1.0;
  cfg.synth.agent_a.z_max = 2.5;
  cfg.synth.agent_b.x_min = 0.3;
  cfg.synth.agent_b.x_max = 2.0;
  cfg.synth.agent_b.z_min = 3.0;
  cfg.synth.agent_b.z_max = 6.0;
  cfg.synth.seed = seed;
  cfg.ridge.seed = seed;
  cfg.grouped.ridge = cfg.ridge;
  cfg.srp.seed = seed;
  return cfg;
}

fs::path write_config(const fs::path& dir, const RunConfig& cfg, const std::string& name = "config.json") {
  const fs::path p = dir / name;
  std::ofstream out(p);
  out << to_json(cfg).dump(2) << "\n";
  return p;
}

}  // namespace

TEST_CASE("config round-trips losslessly and rejects unknown keys") {
  ScratchDir dir("config");
  RunConfig cfg = contrast_config(dir.path(), 42, 10, 3);
  cfg.ridge.n_folds = 4;
  cfg.grouped.n_candidates = 17;
  const auto j1 = to_json(cfg);
  const RunConfig back = config_from_json(j1);
  CHECK(to_json(back) == j1);
  CHECK(back.ridge.seed == cfg.seed);

  nlohmann::json bad = j1;
  bad["riddge"] = {{"n_folds", 3}};
  CHECK_THROWS_AS(config_from_json(bad), ConfigError);
  nlohmann::json bad2 = j1;
  bad2["ridge"]["n_fold"] = 3;
  CHECK_THROWS_AS(config_from_json(bad2), ConfigError);
}

TEST_CASE("end-to-end pipeline through the CLI") {
  ScratchDir dir("e2e");
  const RunConfig cfg = contrast_config(dir.path(), 2024, 40, 3);
  const auto cfg_path = write_config(dir.path(), cfg);
  const std::string base = "--config " + cfg_path.string();
  const fs::path out = cfg.paths.out_dir;

  REQUIRE(run_cli(base + " synth") == 0);
  REQUIRE(fs::exists(out / "joints.csv"));
  REQUIRE(fs::exists(out / "ratings.csv"));
  REQUIRE(fs::exists(out / "analytic_targets.csv"));

  REQUIRE(run_cli(base + " features") == 0);
  REQUIRE(fs::exists(out / "social3d.csv"));
  const auto social3d = read_features_csv(out / "social3d.csv");
  CHECK(social3d.n_cols() == 12);
  CHECK(read_features_csv(out / "joints3d.csv").n_cols() == 270);
  CHECK(read_features_csv(out / "social2d.csv").n_cols() == 8);
  CHECK(read_lines(out / "rejections.csv").size() == 1);  // header only

  REQUIRE(run_cli(base + " encode --features " + (out / "social3d.csv").string() +
                  " --label social3d") == 0);
  REQUIRE(run_cli(base + " encode --features " + (out / "social2d.csv").string() +
                  " --label social2d") == 0);
  const auto s3 = read_scores_csv(out / "scores_social3d.csv");
  REQUIRE(s3.size() == 3);  // distance, facing, depth_gap
  double depth_r3 = 0, depth_r2 = 0;
  for (const auto& r : s3)
    if (r.rating_dim == "depth_gap") depth_r3 = r.r_test;
  for (const auto& r : read_scores_csv(out / "scores_social2d.csv"))
    if (r.rating_dim == "depth_gap") depth_r2 = r.r_test;
  CHECK(depth_r3 > 0.9);             // depth-linear target is recoverable in 3D
  CHECK(std::abs(depth_r2) < 0.75);  // and clearly weaker without depth

  REQUIRE(run_cli(base + " encode-grouped --features " + (out / "social3d.csv").string() +
                  " --features " + (out / "social2d.csv").string() + " --label fused") == 0);
  const auto fused = read_scores_csv(out / "scores_fused.csv");
  REQUIRE(fused.size() == 3);
  CHECK(fused[0].gamma.find("g0:") != std::string::npos);
  CHECK(fused[0].gamma.find(";g1:") != std::string::npos);

  REQUIRE(run_cli(base + " permtest --mode unpaired --a " + (out / "scores_social3d.csv").string() +
                  " --b " + (out / "scores_social2d.csv").string() + " --out pt_unpaired.csv") == 0);
  REQUIRE(run_cli(base + " permtest --mode paired --a " + (out / "scores_social3d.csv").string() +
                  " --b " + (out / "scores_fused.csv").string() + " --out pt_paired.csv") == 0);
  CHECK(read_lines(out / "pt_unpaired.csv").size() == 4);  // header + 3 dims

  REQUIRE(run_cli(base + " semipartial --control " + (out / "social3d.csv").string() + " --full " +
                  (out / "joints3d.csv").string()) == 0);
  const auto semi_lines = read_lines(out / "semipartial.csv");
  CHECK(semi_lines.size() == 10);  // header + 3 controls x 3 dims
  CHECK(semi_lines[0] == "control,rating_dim,r_semi,alpha_residualizer,alpha_predictor,degenerate");

  REQUIRE(run_cli(base + " report --scores " + (out / "scores_social3d.csv").string() +
                  " --scores " + (out / "scores_social2d.csv").string()) == 0);
  const auto bars = read_lines(out / "report_bars.csv");
  CHECK(bars[0] == "kind,class,feature_set,layer,rating_dim,value");
  int n_bar = 0, n_dot = 0;
  for (const auto& line : bars) {
    if (line.rfind("bar,", 0) == 0) ++n_bar;
    if (line.rfind("dot,", 0) == 0) ++n_dot;
  }
  CHECK(n_bar == 6);
  CHECK(n_dot == 6);

  // manifest lists every stage with digests
  const auto manifest = nlohmann::json::parse(slurp(out / "manifest.json"));
  CHECK(manifest.contains("run_id"));
  CHECK(manifest["stages"].contains("synth"));
  CHECK(manifest["stages"].contains("features"));
  CHECK(manifest["stages"].contains("encode:social3d"));
}

TEST_CASE("reruns are byte-identical; reordered inputs do not matter") {
  ScratchDir dir("determinism");
  const RunConfig cfg = contrast_config(dir.path(), 99, 12, 2);
  const auto cfg_path = write_config(dir.path(), cfg);
  const std::string base = "--config " + cfg_path.string();
  const fs::path out = cfg.paths.out_dir;

  REQUIRE(run_cli(base + " synth") == 0);
  REQUIRE(run_cli(base + " features") == 0);
  REQUIRE(run_cli(base + " encode --features " + (out / "social3d.csv").string() + " --label s") == 0);
  const std::string scores1 = slurp(out / "scores_s.csv");
  const std::string manifest1 = slurp(out / "manifest.json");

  // rerun everything into the same out dir
  fs::remove_all(out);
  REQUIRE(run_cli(base + " synth") == 0);
  REQUIRE(run_cli(base + " features") == 0);
  REQUIRE(run_cli(base + " encode --features " + (out / "social3d.csv").string() + " --label s") == 0);
  CHECK(slurp(out / "scores_s.csv") == scores1);
  CHECK(slurp(out / "manifest.json") == manifest1);

  // shuffle the rating rows (ids intact): scores must not change
  const auto ratings = read_lines(out / "ratings.csv");
  std::vector<std::string> rows(ratings.begin() + 1, ratings.end());
  std::reverse(rows.begin(), rows.end());
  std::ofstream shuffled(out / "ratings.csv");
  shuffled << ratings[0] << "\n";
  for (const auto& r : rows) shuffled << r << "\n";
  shuffled.close();
  REQUIRE(run_cli(base + " encode --features " + (out / "social3d.csv").string() + " --label s") == 0);
  CHECK(slurp(out / "scores_s.csv") == scores1);
}

TEST_CASE("corrupt frames reject the clip; parse errors fail hard") {
  ScratchDir dir("rejects");
  const RunConfig cfg = contrast_config(dir.path(), 7, 6, 2);
  const auto cfg_path = write_config(dir.path(), cfg);
  const std::string base = "--config " + cfg_path.string();
  const fs::path out = cfg.paths.out_dir;
  REQUIRE(run_cli(base + " synth") == 0);

  // corrupt one clip's depth (bev_depth <= 0 fails validation, not parsing)
  auto lines = read_lines(out / "translations.csv");
  for (auto& line : lines)
    if (line.rfind("clip0002,1,0,", 0) == 0) {
      line = line.substr(0, line.rfind(',')) + ",-4";
      break;
    }
  std::ofstream rewrite(out / "translations.csv");
  for (const auto& l : lines) rewrite << l << "\n";
  rewrite.close();

  REQUIRE(run_cli(base + " features") == 0);
  const auto rejections = read_lines(out / "rejections.csv");
  REQUIRE(rejections.size() == 2);
  CHECK(rejections[1].rfind("clip0002,", 0) == 0);
  CHECK(read_features_csv(out / "social3d.csv").ids.size() == 5);

  // permissive coverage keeps the clip, averaging over the valid frames
  RunConfig permissive = cfg;
  permissive.features.min_frame_coverage = 0.5;
  const auto perm_cfg = write_config(dir.path(), permissive, "permissive.json");
  REQUIRE(run_cli("--config " + perm_cfg.string() + " features") == 0);
  CHECK(read_lines(out / "rejections.csv").size() == 1);
  CHECK(read_features_csv(out / "social3d.csv").ids.size() == 6);

  // unparseable row is a hard data error (exit 3), not a rejection
  std::ofstream corrupt(out / "translations.csv", std::ios::app);
  corrupt << "clip0001,0,0,not_a_number,0,0,1\n";
  corrupt.close();
  CHECK(run_cli(base + " features") == 3);
}

TEST_CASE("exit codes: config errors and data errors") {
  ScratchDir dir("exitcodes");
  const RunConfig cfg = contrast_config(dir.path(), 3, 8, 2);
  const auto cfg_path = write_config(dir.path(), cfg);
  const std::string base = "--config " + cfg_path.string();
  const fs::path out = cfg.paths.out_dir;
  REQUIRE(run_cli(base + " synth") == 0);
  REQUIRE(run_cli(base + " features") == 0);

  SECTION("duplicate clip id in ratings is a data error") {
    std::ofstream app(out / "ratings.csv", std::ios::app);
    app << "clip0000,test,1,1,1\n";
    app.close();
    CHECK(run_cli(base + " encode --features " + (out / "social3d.csv").string()) == 3);
  }
  SECTION("rated clip missing from the feature table") {
    std::ofstream app(out / "ratings.csv", std::ios::app);
    app << "ghost,train,1,1,1\n";
    app.close();
    CHECK(run_cli(base + " encode --features " + (out / "social3d.csv").string()) == 3);
  }
  SECTION("unknown config key") {
    nlohmann::json j = to_json(cfg);
    j["extra_section"] = 1;
    std::ofstream bad(dir / "bad.json");
    bad << j.dump() << "\n";
    bad.close();
    CHECK(run_cli("--config " + (dir / "bad.json").string() + " synth") == 2);
  }
  SECTION("grouped needs two groups") {
    CHECK(run_cli(base + " encode-grouped --features " + (out / "social3d.csv").string()) == 2);
  }
  SECTION("semipartial slices mode needs a 12-wide control") {
    CHECK(run_cli(base + " semipartial --control " + (out / "social2d.csv").string() + " --full " +
                  (out / "joints3d.csv").string()) == 2);
  }
  SECTION("report on missing scores names the stage to run") {
    CHECK(run_cli(base + " report --scores " + (out / "scores_nope.csv").string()) == 3);
  }
}

TEST_CASE("training-stage artifacts ignore test-set perturbations") {
  ScratchDir dir("leakage");
  const RunConfig cfg = contrast_config(dir.path(), 15, 14, 2);
  const auto cfg_path = write_config(dir.path(), cfg);
  const std::string base = "--config " + cfg_path.string();
  const fs::path out = cfg.paths.out_dir;
  REQUIRE(run_cli(base + " synth") == 0);
  REQUIRE(run_cli(base + " features") == 0);
  REQUIRE(run_cli(base + " encode --features " + (out / "social3d.csv").string() + " --label l") == 0);
  const std::string selection1 = slurp(out / "cv_selection_l.csv");
  const std::string scores1 = slurp(out / "scores_l.csv");

  // perturb every test-row rating value
  auto lines = read_lines(out / "ratings.csv");
  std::ofstream rewrite(out / "ratings.csv");
  rewrite << lines[0] << "\n";
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto cells = split(lines[i], ',');
    std::string row(cells[0]);
    row += ",";
    row += std::string(cells[1]);
    if (trim(cells[1]) == "test") {
      for (std::size_t j = 2; j < cells.size(); ++j)
        row += "," + dtos(parse_double(trim(cells[j])) + 0.37);
    } else {
      for (std::size_t j = 2; j < cells.size(); ++j) row += "," + std::string(cells[j]);
    }
    rewrite << row << "\n";
  }
  rewrite.close();

  REQUIRE(run_cli(base + " encode --features " + (out / "social3d.csv").string() + " --label l") == 0);
  CHECK(slurp(out / "cv_selection_l.csv") == selection1);  // training-only artifact
  CHECK(slurp(out / "scores_l.csv") != scores1);           // test scores do move
}

TEST_CASE("embedding trees: layer selection, fixed-layer targets, scatter report") {
  ScratchDir dir("embeddings");
  RunConfig cfg = contrast_config(dir.path(), 31, 0, 0);
  const fs::path out = cfg.paths.out_dir;
  fs::create_directories(out);

  // hand-built ratings: 24 clips, 2 dims
  Rng rng(313);
  std::vector<std::string> ids;
  RatingTable ratings;
  ratings.dims = {"da", "db"};
  ratings.values.resize(24, 2);
  for (int i = 0; i < 24; ++i) {
    ids.push_back("v" + std::to_string(100 + i));
    ratings.ids.push_back(ids.back());
    ratings.is_train.push_back(i < 18);
    ratings.values(i, 0) = rng.normal();
    ratings.values(i, 1) = rng.normal();
  }
  cfg.paths.ratings = (out / "ratings.csv").string();
  write_ratings_csv(cfg.paths.ratings, ratings);

  // modelA: layer0 = noise, layer1 = targets + tiny noise; modelB: noise
  auto make_table = [&](int cols, bool informative) {
    FeatureTable t;
    t.ids = ids;
    t.values.resize(24, cols);
    for (int i = 0; i < 24; ++i)
      for (int j = 0; j < cols; ++j) t.values(i, j) = rng.normal();
    if (informative) {
      t.values.col(0) = ratings.values.col(0) + 0.01 * t.values.col(2);
      t.values.col(1) = ratings.values.col(1) + 0.01 * t.values.col(3);
    }
    return t;
  };
  const fs::path emb = dir / "emb";
  write_fmx(emb / "modelA" / "layer0.fmx", make_table(8, false));
  write_fmx(emb / "modelA" / "layer1.fmx", make_table(8, true));
  write_fmx(emb / "modelB" / "layer0.fmx", make_table(6, false));

  const auto cfg_path = write_config(dir.path(), cfg);
  const std::string base = "--config " + cfg_path.string();
  REQUIRE(run_cli(base + " encode --embeddings-dir " + emb.string() + " --label emb") == 0);
  const auto rows = read_scores_csv(out / "scores_emb.csv");
  REQUIRE(rows.size() == 4);  // 2 models x 2 dims
  for (const auto& r : rows) {
    if (r.feature_set == "modelA") {
      CHECK(r.layer == "layer1");  // informative layer wins every dim
      CHECK(r.r_test > 0.9);
    }
  }

  // feature table as target, layers fixed by the previous selection
  FeatureTable pose;
  pose.ids = ids;
  pose.values.resize(24, 3);
  for (int i = 0; i < 24; ++i)
    for (int j = 0; j < 3; ++j) pose.values(i, j) = rng.normal();
  pose.values.col(0) = ratings.values.col(0);  // modelA/layer1 can predict this
  write_features_csv(out / "pose.csv", pose);
  REQUIRE(run_cli(base + " encode --embeddings-dir " + emb.string() + " --target-features " +
                  (out / "pose.csv").string() + " --layer-choices " +
                  (out / "scores_emb.csv").string() + " --label pose") == 0);
  const auto pose_rows = read_scores_csv(out / "scores_pose.csv");
  CHECK(pose_rows.size() == 4);

  REQUIRE(run_cli(base + " report --x " + (out / "scores_emb.csv").string() + " --y " +
                  (out / "scores_pose.csv").string()) == 0);
  const auto scatter = read_lines(out / "report_scatter.csv");
  CHECK(scatter[0] == "kind,feature_set,rating_dim,x,y");
  int n_points = 0, n_r = 0;
  for (const auto& line : scatter) {
    if (line.rfind("point,", 0) == 0) ++n_points;
    if (line.rfind("r,", 0) == 0) ++n_r;
  }
  CHECK(n_points == 4);
  CHECK(n_r == 2);  // one footer r per dim
}

TEST_CASE("wide embedding layers are reduced by seeded projection inside encode") {
  ScratchDir dir("srp_encode");
  RunConfig cfg = contrast_config(dir.path(), 61, 0, 0);
  cfg.srp.target_dim = 24;  // small target: this test checks the glue, not the JL bound
  const fs::path out = cfg.paths.out_dir;
  fs::create_directories(out);

  Rng rng(909);
  RatingTable ratings;
  ratings.dims = {"t"};
  ratings.values.resize(30, 1);
  FeatureTable wide;
  wide.values.resize(30, 200);
  for (int i = 0; i < 30; ++i) {
    ratings.ids.push_back("c" + std::to_string(10 + i));
    ratings.is_train.push_back(i < 24);
    ratings.values(i, 0) = rng.normal();
    for (int j = 0; j < 200; ++j) wide.values(i, j) = rng.normal();
  }
  wide.ids = ratings.ids;
  cfg.paths.ratings = (out / "ratings.csv").string();
  write_ratings_csv(cfg.paths.ratings, ratings);
  write_fmx(dir / "emb" / "m" / "l0.fmx", wide);

  const auto cfg_path = write_config(dir.path(), cfg);
  REQUIRE(run_cli("--config " + cfg_path.string() + " encode --embeddings-dir " +
                  (dir / "emb").string() + " --label wide") == 0);
  const auto rows = read_scores_csv(out / "scores_wide.csv");
  REQUIRE(rows.size() == 1);
  CHECK(std::abs(rows[0].r_test) < 1.0);  // ran end to end on the projected design

  // same seed, same projection: rerun must reproduce the scores exactly
  const std::string bytes = slurp(out / "scores_wide.csv");
  REQUIRE(run_cli("--config " + cfg_path.string() + " encode --embeddings-dir " +
                  (dir / "emb").string() + " --label wide") == 0);
  CHECK(slurp(out / "scores_wide.csv") == bytes);
}

TEST_CASE("reliability command on a synthetic rater table") {
  ScratchDir dir("rel");
  RunConfig cfg = contrast_config(dir.path(), 5, 0, 0);
  fs::create_directories(cfg.paths.out_dir);
  const auto cfg_path = write_config(dir.path(), cfg);

  Rng rng(515);
  std::ofstream raters(dir / "raters.csv");
  raters << "clip_id,rater_id,rating_dim,value\n";
  for (int c = 0; c < 30; ++c) {
    const double base_val = rng.uniform(1, 5);
    for (int r = 0; r < 8; ++r)
      raters << "c" << c << ",r" << r << ",warmth," << dtos(base_val + 0.2 * rng.normal()) << "\n";
  }
  raters.close();

  REQUIRE(run_cli("--config " + cfg_path.string() + " reliability --raters " +
                  (dir / "raters.csv").string() + " --splits 20") == 0);
  const auto lines = read_lines(fs::path(cfg.paths.out_dir) / "reliability.csv");
  REQUIRE(lines.size() == 2);
  CHECK(lines[0] == "rating_dim,r_split_half,n_splits,spearman_brown,n_clips_used,n_clips_excluded");
  CHECK(lines[1].rfind("warmth,", 0) == 0);
  // consistent raters on a 1-5 scale: corrected reliability should be high
  const auto cells = split(lines[1], ',');
  CHECK(parse_double(trim(cells[1])) > 0.9);
}

TEST_CASE("track JSON variant feeds the features stage") {
  ScratchDir dir("jsonvariant");
  RunConfig cfg = contrast_config(dir.path(), 8, 5, 2);
  const fs::path out = cfg.paths.out_dir;
  auto cfg_path = write_config(dir.path(), cfg);
  REQUIRE(run_cli("--config " + cfg_path.string() + " synth --json") == 0);
  REQUIRE(fs::exists(out / "tracks.json"));

  cfg.paths.track_json = (out / "tracks.json").string();
  cfg.paths.joints.clear();
  cfg.paths.translations.clear();
  cfg_path = write_config(dir.path(), cfg, "config_json.json");
  REQUIRE(run_cli("--config " + cfg_path.string() + " features") == 0);
  CHECK(read_features_csv(out / "social3d.csv").n_cols() == 12);
}
