#pragma once

// Banded ridge over predefined feature groups. Group weights gamma live on
// the simplex and scale each group's columns by sqrt(gamma_g) under a single
// shared alpha, which is the convex kernel combination sum_g gamma_g Xg Xg^T.
// Candidates come from symmetric Dirichlet draws (random search); the uniform
// candidate is always present at index 0.

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "sociopose/common.hpp"
#include "sociopose/ridge.hpp"
#include "sociopose/rng.hpp"

namespace sociopose {

struct GroupSpec {
  std::vector<std::string> ids;
  std::vector<Eigen::MatrixXd> mats;  // shared row alignment

  void validate() const {
    if (mats.empty()) throw DataError("grouped: need at least one group");
    if (ids.size() != mats.size()) throw DataError("grouped: ids/mats size mismatch");
    const auto n = mats.front().rows();
    for (std::size_t g = 0; g < mats.size(); ++g) {
      if (mats[g].rows() != n)
        throw DataError("grouped: group '" + ids[g] + "' has " + std::to_string(mats[g].rows()) +
                        " rows, expected " + std::to_string(n));
      if (mats[g].cols() < 1) throw DataError("grouped: group '" + ids[g] + "' has no columns");
    }
  }

  int n_groups() const { return static_cast<int>(mats.size()); }
  Eigen::Index n_rows() const { return mats.empty() ? 0 : mats.front().rows(); }
};

struct GammaCandidate {
  Eigen::VectorXd gamma;  // simplex: >= 0, sums to 1
  double source_concentration = 0.0;  // 0 marks the deterministic uniform candidate
};

struct GroupedSearchConfig {
  int n_candidates = 200;
  std::vector<double> concentrations{0.1, 1.0};
  RidgeConfig ridge;  // shared alpha grid, fold plan, seed

  void validate() const {
    if (n_candidates < 1) throw ConfigError("grouped: n_candidates must be >= 1");
    if (concentrations.empty()) throw ConfigError("grouped: concentrations must be non-empty");
    for (double c : concentrations)
      if (!(c > 0.0)) throw ConfigError("grouped: concentrations must be positive");
    ridge.validate();
  }
};

// Uniform candidate first, then n_candidates Dirichlet draws split as evenly
// as possible across the listed concentrations.
inline std::vector<GammaCandidate> sample_gammas(const GroupedSearchConfig& cfg, int n_groups) {
  cfg.validate();
  if (n_groups < 1) throw ConfigError("sample_gammas: n_groups must be >= 1");
  std::vector<GammaCandidate> out;
  out.reserve(static_cast<std::size_t>(cfg.n_candidates) + 1);
  out.push_back({Eigen::VectorXd::Constant(n_groups, 1.0 / n_groups), 0.0});

  const int n_conc = static_cast<int>(cfg.concentrations.size());
  const int base = cfg.n_candidates / n_conc;
  const int extra = cfg.n_candidates % n_conc;
  std::uint64_t draw = 0;
  for (int ci = 0; ci < n_conc; ++ci) {
    const int count = base + (ci < extra ? 1 : 0);
    const double conc = cfg.concentrations[static_cast<std::size_t>(ci)];
    for (int j = 0; j < count; ++j, ++draw) {
      Rng rng(derive_seed(cfg.ridge.seed, "gamma", draw));
      const auto g = rng.dirichlet(conc, n_groups);
      out.push_back({Eigen::Map<const Eigen::VectorXd>(g.data(), n_groups), conc});
    }
  }
  return out;
}

// ---------------------------------------------------------------- fitting

namespace detail {

inline void check_gamma(const Eigen::VectorXd& gamma, int n_groups) {
  if (gamma.size() != n_groups)
    throw DataError("grouped: gamma has " + std::to_string(gamma.size()) + " entries for " +
                    std::to_string(n_groups) + " groups");
  double sum = 0.0;
  for (Eigen::Index g = 0; g < gamma.size(); ++g) {
    if (!(gamma[g] >= 0.0)) throw DataError("grouped: gamma entries must be >= 0");
    sum += gamma[g];
  }
  if (!(sum > 0.0)) throw DataError("grouped: gamma must not be all zero");
}

inline Eigen::MatrixXd scaled_concat(const std::vector<Eigen::MatrixXd>& groups,
                                     const Eigen::VectorXd& gamma) {
  Eigen::Index d_total = 0;
  for (const auto& g : groups) d_total += g.cols();
  Eigen::MatrixXd out(groups.front().rows(), d_total);
  Eigen::Index col = 0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    out.middleCols(col, groups[g].cols()) = groups[g] * std::sqrt(gamma[static_cast<Eigen::Index>(g)]);
    col += groups[g].cols();
  }
  return out;
}

}  // namespace detail

struct GroupedWeights {
  Eigen::VectorXd gamma;
  double alpha = 0.0;
  Eigen::MatrixXd W;  // weights on the sqrt(gamma)-scaled concatenated design
};

// Inputs are expected standardized (as with ridge_fit); gamma need not lie on
// the simplex here so scale-absorption identities can be exercised directly.
inline GroupedWeights grouped_fit(const std::vector<Eigen::MatrixXd>& groups,
                                  const Eigen::MatrixXd& Y, const Eigen::VectorXd& gamma,
                                  double alpha) {
  if (groups.empty()) throw DataError("grouped_fit: no groups");
  detail::check_gamma(gamma, static_cast<int>(groups.size()));
  return {gamma, alpha, ridge_fit(detail::scaled_concat(groups, gamma), Y, alpha)};
}

inline Eigen::MatrixXd grouped_predict(const std::vector<Eigen::MatrixXd>& groups,
                                       const GroupedWeights& model) {
  return detail::scaled_concat(groups, model.gamma) * model.W;
}

// Standardization-aware model for train/test evaluation.
struct GroupedModel {
  std::vector<StandardizationStats> group_stats;
  StandardizationStats y_stats;
  GroupedWeights weights;
};

inline GroupedModel grouped_fit_standardized(const GroupSpec& spec, const Eigen::MatrixXd& Y_train,
                                             const Eigen::VectorXd& gamma, double alpha) {
  spec.validate();
  GroupedModel m;
  std::vector<Eigen::MatrixXd> std_groups;
  std_groups.reserve(spec.mats.size());
  for (const auto& X : spec.mats) {
    m.group_stats.push_back(zscore_fit(X));
    std_groups.push_back(zscore_apply(X, m.group_stats.back()));
  }
  m.y_stats = zscore_fit(Y_train);
  m.weights = grouped_fit(std_groups, zscore_apply(Y_train, m.y_stats), gamma, alpha);
  return m;
}

inline Eigen::MatrixXd grouped_model_predict(const GroupedModel& m,
                                             const std::vector<Eigen::MatrixXd>& test_mats) {
  if (test_mats.size() != m.group_stats.size())
    throw DataError("grouped predict: group count mismatch");
  std::vector<Eigen::MatrixXd> std_groups;
  std_groups.reserve(test_mats.size());
  for (std::size_t g = 0; g < test_mats.size(); ++g)
    std_groups.push_back(zscore_apply(test_mats[g], m.group_stats[g]));
  return grouped_predict(std_groups, m.weights);
}

// Pearson r per target dim on the held-out split (predictions live in the
// standardized-target space; correlation is unaffected).
inline std::vector<PearsonResult> grouped_evaluate(const GroupedModel& m,
                                                   const std::vector<Eigen::MatrixXd>& test_mats,
                                                   const Eigen::MatrixXd& Y_test) {
  const Eigen::MatrixXd pred = grouped_model_predict(m, test_mats);
  std::vector<PearsonResult> out;
  out.reserve(static_cast<std::size_t>(Y_test.cols()));
  for (Eigen::Index d = 0; d < Y_test.cols(); ++d) out.push_back(pearson(pred.col(d), Y_test.col(d)));
  return out;
}

// ---------------------------------------------------------------- search

struct GroupedSelection {
  int candidate_index = -1;
  Eigen::VectorXd gamma;
  double alpha = 0.0;
  double mean_r = 0.0;
};

struct GroupedSearchResult {
  std::vector<GammaCandidate> candidates;
  std::vector<GroupedSelection> per_dim;
  std::vector<GroupedModel> models;  // refit on the full training split, per dim
};

inline GroupedSearchResult grouped_search(const GroupSpec& spec, const Eigen::MatrixXd& Y_train,
                                          const GroupedSearchConfig& cfg) {
  spec.validate();
  cfg.validate();
  const int n = static_cast<int>(spec.n_rows());
  if (Y_train.rows() != n) throw DataError("grouped_search: group/target row mismatch");
  if (n < 2 * cfg.ridge.n_folds)
    throw DataError("grouped_search: need at least " + std::to_string(2 * cfg.ridge.n_folds) +
                    " training rows, got " + std::to_string(n));

  GroupedSearchResult res;
  res.candidates = sample_gammas(cfg, spec.n_groups());
  const FoldPlan plan = make_fold_plan(n, cfg.ridge);
  const int t = static_cast<int>(Y_train.cols());
  const int n_alpha = static_cast<int>(cfg.ridge.alpha_grid.size());
  const int n_cand = static_cast<int>(res.candidates.size());

  // sum_r[(cand * n_alpha + alpha_idx), dim]
  Eigen::MatrixXd sum_r = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_cand) * n_alpha, t);
  for (int cell = 0; cell < plan.n_cells(); ++cell) {
    const auto& val_rows = plan.val_folds[static_cast<std::size_t>(cell)];
    const auto tr_rows = detail::complement_rows(n, val_rows);
    std::vector<Eigen::MatrixXd> Xtr(spec.mats.size()), Xva(spec.mats.size());
    for (std::size_t g = 0; g < spec.mats.size(); ++g) {
      const Eigen::MatrixXd tr_raw = detail::take_rows(spec.mats[g], tr_rows);
      const auto stats = zscore_fit(tr_raw);
      Xtr[g] = zscore_apply(tr_raw, stats);
      Xva[g] = zscore_apply(detail::take_rows(spec.mats[g], val_rows), stats);
    }
    const Eigen::MatrixXd Ytr_raw = detail::take_rows(Y_train, tr_rows);
    const Eigen::MatrixXd Yva_raw = detail::take_rows(Y_train, val_rows);
    const auto ys = zscore_fit(Ytr_raw);
    const Eigen::MatrixXd Ytr = zscore_apply(Ytr_raw, ys);

    for (int c = 0; c < n_cand; ++c) {
      const auto& gamma = res.candidates[static_cast<std::size_t>(c)].gamma;
      const Eigen::MatrixXd Str = detail::scaled_concat(Xtr, gamma);
      const Eigen::MatrixXd Sva = detail::scaled_concat(Xva, gamma);
      const detail::RidgeSweep sweep(Str, Ytr);
      for (int ai = 0; ai < n_alpha; ++ai) {
        const Eigen::MatrixXd pred = Sva * sweep.fit(cfg.ridge.alpha_grid[static_cast<std::size_t>(ai)]);
        for (int d = 0; d < t; ++d)
          sum_r(static_cast<Eigen::Index>(c) * n_alpha + ai, d) += pearson(pred.col(d), Yva_raw.col(d)).r;
      }
    }
  }

  res.per_dim.resize(static_cast<std::size_t>(t));
  for (int d = 0; d < t; ++d) {
    GroupedSelection best;
    bool have = false;
    for (int c = 0; c < n_cand; ++c) {
      for (int ai = 0; ai < n_alpha; ++ai) {
        const double mean_r = sum_r(static_cast<Eigen::Index>(c) * n_alpha + ai, d) / plan.n_cells();
        const double alpha = cfg.ridge.alpha_grid[static_cast<std::size_t>(ai)];
        const bool better = !have || mean_r > best.mean_r ||
                            (mean_r == best.mean_r &&
                             (alpha < best.alpha || (alpha == best.alpha && c < best.candidate_index)));
        if (better) {
          best = {c, res.candidates[static_cast<std::size_t>(c)].gamma, alpha, mean_r};
          have = true;
        }
      }
    }
    res.per_dim[static_cast<std::size_t>(d)] = best;
  }

  res.models.reserve(static_cast<std::size_t>(t));
  for (int d = 0; d < t; ++d) {
    const auto& sel = res.per_dim[static_cast<std::size_t>(d)];
    res.models.push_back(grouped_fit_standardized(spec, Y_train.col(d), sel.gamma, sel.alpha));
  }
  return res;
}

}  // namespace sociopose
