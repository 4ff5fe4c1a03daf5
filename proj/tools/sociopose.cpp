// Command-line entry point. Subcommands map one-to-one onto pipeline stages;
// a single JSON config carries the shared settings, with --seed/--out-dir
// overrides. Exit codes: 0 ok, 2 config error, 3 data error, 4 numerical.

#include <CLI11.hpp>

#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "sociopose/common.hpp"
#include "sociopose/config.hpp"
#include "sociopose/pipeline.hpp"

namespace sp = sociopose;

int main(int argc, char** argv) {
  CLI::App app{"sociopose: 3D social pose feature encoding benchmark pipeline"};
  app.require_subcommand(1);
  app.fallthrough();  // global options may follow the subcommand

  std::string config_path;
  std::string out_dir_override;
  std::uint64_t seed_override = 0;
  bool seed_given = false;
  app.add_option("--config", config_path, "run config (JSON)")->required();
  app.add_option("--out-dir", out_dir_override, "override paths.out_dir");
  app.add_flag("--version", [](std::int64_t) { std::cout << sp::kToolVersion << "\n"; std::exit(0); },
               "print version and exit");
  auto* seed_opt = app.add_option("--seed", seed_override, "override the global seed");

  // synth
  auto* synth = app.add_subcommand("synth", "generate synthetic dyadic scenes with analytic targets");
  bool synth_json = false;
  synth->add_flag("--json", synth_json, "also write the single-file tracks.json variant");

  // features
  auto* features = app.add_subcommand("features", "extract joints3d/social3d/social2d clip features");

  // encode
  auto* encode = app.add_subcommand("encode", "ridge-encode feature sets against the rating table");
  std::vector<std::string> enc_features;
  std::string enc_embeddings, enc_targets, enc_choices, enc_label = "scores";
  encode->add_option("--features", enc_features, "feature CSV/fmx file(s), one feature set each");
  encode->add_option("--embeddings-dir", enc_embeddings, "directory of <model>/<layer>.fmx trees");
  encode->add_option("--target-features", enc_targets, "score against this feature table instead of ratings");
  encode->add_option("--layer-choices", enc_choices, "scores CSV naming the layer to use per (model, dim)");
  encode->add_option("--label", enc_label, "output label (scores_<label>.csv)");

  // encode-grouped
  auto* grouped = app.add_subcommand("encode-grouped", "banded ridge fusion of >= 2 feature sets");
  std::vector<std::string> grp_features;
  std::string grp_label = "grouped", grp_feature_set;
  grouped->add_option("--features", grp_features, "feature files, one group each (>= 2)")->required();
  grouped->add_option("--label", grp_label, "output label");
  grouped->add_option("--feature-set", grp_feature_set,
                      "feature_set name for the emitted rows (default: joined group names)");

  // semipartial
  auto* semi = app.add_subcommand("semipartial", "unique-variance analysis via ridge residualization");
  std::string semi_control, semi_full, semi_mode = "slices";
  semi->add_option("--control", semi_control, "control feature table")->required();
  semi->add_option("--full", semi_full, "full feature table (e.g. joints3d)")->required();
  semi->add_option("--mode", semi_mode, "slices (positions/directions/combined) or whole")
      ->check(CLI::IsMember({"slices", "whole"}));

  // permtest
  auto* perm = app.add_subcommand("permtest", "permutation tests on encoding score files");
  std::string perm_mode, perm_a, perm_b, perm_out = "permtest.csv";
  int perm_n = 5000;
  perm->add_option("--mode", perm_mode, "unpaired (two-tailed) or paired (one-tailed)")
      ->required()
      ->check(CLI::IsMember({"unpaired", "paired"}));
  perm->add_option("--a", perm_a, "first scores CSV")->required();
  perm->add_option("--b", perm_b, "second scores CSV")->required();
  perm->add_option("--n-perm", perm_n, "permutation count (default 5000)");
  perm->add_option("--out", perm_out, "output file name");

  // reliability
  auto* rel = app.add_subcommand("reliability", "split-half reliability of a rater table");
  std::string rel_raters;
  int rel_splits = 100;
  bool rel_no_sb = false;
  rel->add_option("--raters", rel_raters, "rater CSV (clip_id,rater_id,rating_dim,value)")->required();
  rel->add_option("--splits", rel_splits, "number of random rater splits");
  rel->add_flag("--no-spearman-brown", rel_no_sb, "report uncorrected split-half r");

  // report
  auto* report = app.add_subcommand("report", "emit figure-data CSVs from prior stage outputs");
  std::vector<std::string> rep_scores;
  std::string rep_x, rep_y, rep_rel;
  report->add_option("--scores", rep_scores, "scores CSVs, one bar class each");
  report->add_option("--x", rep_x, "x-axis scores CSV for the scatter");
  report->add_option("--y", rep_y, "y-axis scores CSV for the scatter");
  report->add_option("--reliability", rep_rel, "reliability CSV for ceiling bars");

  try {
    app.parse(argc, argv);
    seed_given = seed_opt->count() > 0;

    sp::RunConfig cfg = sp::load_config(config_path);
    if (!out_dir_override.empty()) cfg.paths.out_dir = out_dir_override;
    if (seed_given) {
      cfg.seed = seed_override;
      cfg.ridge.seed = cfg.seed;
      cfg.grouped.ridge.seed = cfg.seed;
      cfg.srp.seed = cfg.seed;
      cfg.synth.seed = cfg.seed;
    }

    if (*synth) {
      const auto out = sp::cmd_synth(cfg, synth_json);
      std::cout << "wrote " << out.joints.string() << ", " << out.translations.string() << ", "
                << out.ratings.string() << ", " << out.targets.string() << "\n";
    } else if (*features) {
      const auto out = sp::cmd_features(cfg);
      std::cout << "wrote " << out.joints3d.string() << ", " << out.social3d.string() << ", "
                << out.social2d.string() << " (" << out.n_clips - out.n_rejected << "/"
                << out.n_clips << " clips kept)\n";
    } else if (*encode) {
      sp::EncodeOptions opts;
      for (const auto& f : enc_features) opts.feature_files.emplace_back(f);
      opts.embeddings_dir = enc_embeddings;
      if (opts.feature_files.empty() && opts.embeddings_dir.empty())
        opts.embeddings_dir = cfg.paths.embeddings_dir;  // config fallback
      opts.target_features = enc_targets;
      opts.layer_choices = enc_choices;
      opts.label = enc_label;
      const auto out = sp::cmd_encode(cfg, opts);
      std::cout << "wrote " << out.scores.string() << " (" << out.rows.size() << " rows)\n";
    } else if (*grouped) {
      std::vector<sp::fs::path> files(grp_features.begin(), grp_features.end());
      const auto out = sp::cmd_encode_grouped(cfg, files, grp_label, grp_feature_set);
      std::cout << "wrote " << out.scores.string() << " (" << out.rows.size() << " rows)\n";
    } else if (*semi) {
      const auto mode = semi_mode == "whole" ? sp::SemiPartialMode::whole : sp::SemiPartialMode::social_slices;
      std::cout << "wrote " << sp::cmd_semipartial(cfg, semi_control, semi_full, mode).string() << "\n";
    } else if (*perm) {
      const auto mode = perm_mode == "paired" ? sp::PermTestMode::paired : sp::PermTestMode::unpaired;
      std::cout << "wrote " << sp::cmd_permtest(cfg, mode, perm_a, perm_b, perm_n, perm_out).string()
                << "\n";
    } else if (*rel) {
      std::cout << "wrote " << sp::cmd_reliability(cfg, rel_raters, rel_splits, !rel_no_sb).string()
                << "\n";
    } else if (*report) {
      sp::ReportOptions opts;
      for (const auto& f : rep_scores) opts.scores_files.emplace_back(f);
      opts.x_scores = rep_x;
      opts.y_scores = rep_y;
      opts.reliability = rep_rel;
      const auto out = sp::cmd_report(cfg, opts);
      if (!out.bars.empty()) std::cout << "wrote " << out.bars.string() << "\n";
      if (!out.scatter.empty()) std::cout << "wrote " << out.scatter.string() << "\n";
    }
    return sp::kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sp::kExitConfig;
  } catch (const sp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return sp::kExitConfig;
  } catch (const sp::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return sp::kExitData;
  } catch (const sp::NumericError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return sp::kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return sp::kExitNumeric;
  }
}
