#pragma once

// Permutation tests, semi-partial correlation via ridge residualization,
// split-half reliability, and score-relationship summaries.
//
// Sampled permutations are seeded per draw (hash(seed, stream, draw_index)),
// so partitioning draws into batches reproduces the serial p-value exactly.
// Exhaustive enumeration takes over automatically whenever the full
// assignment count fits within n_perm.

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "sociopose/common.hpp"
#include "sociopose/ridge.hpp"
#include "sociopose/rng.hpp"

namespace sociopose {

enum class PermTail { two_sided, one_sided_leq };

struct PermTestResult {
  double observed = 0.0;
  double p_value = 1.0;
  int n_permutations = 0;
  PermTail tail = PermTail::two_sided;
  std::uint64_t seed = 0;
  bool exhaustive = false;
  int n_extreme = 0;      // count behind p_value = n_extreme / n_permutations
  double null_mean = 0.0;
  double null_sd = 0.0;
};

namespace detail {

struct NullAccumulator {
  long long n = 0;
  double sum = 0.0, sumsq = 0.0;
  int extreme = 0;

  void add(double stat, bool is_extreme) {
    ++n;
    sum += stat;
    sumsq += stat * stat;
    if (is_extreme) ++extreme;
  }

  void finish(PermTestResult& r) const {
    r.n_permutations = static_cast<int>(n);
    r.n_extreme = extreme;
    r.p_value = static_cast<double>(extreme) / static_cast<double>(n);
    r.null_mean = sum / static_cast<double>(n);
    const double var = sumsq / static_cast<double>(n) - r.null_mean * r.null_mean;
    r.null_sd = var > 0.0 ? std::sqrt(var) : 0.0;
  }
};

// C(n, k) capped at `cap` to decide exhaustive vs sampled without overflow.
inline std::uint64_t choose_capped(int n, int k, std::uint64_t cap) {
  if (k > n - k) k = n - k;
  std::uint64_t c = 1;
  for (int i = 1; i <= k; ++i) {
    c = c * static_cast<std::uint64_t>(n - k + i) / static_cast<std::uint64_t>(i);
    if (c > cap) return cap + 1;
  }
  return c;
}

}  // namespace detail

// Two-tailed test on the difference of group means under label shuffling.
inline PermTestResult perm_test_unpaired(const std::vector<double>& a, const std::vector<double>& b,
                                         int n_perm = 5000, std::uint64_t seed = 0,
                                         bool force_sampled = false) {
  if (a.empty() || b.empty()) throw DataError("perm_test_unpaired: empty group");
  if (n_perm < 1) throw ConfigError("perm_test_unpaired: n_perm must be >= 1");
  const int na = static_cast<int>(a.size());
  const int nb = static_cast<int>(b.size());
  const int n = na + nb;
  std::vector<double> pool(a);
  pool.insert(pool.end(), b.begin(), b.end());
  const double total = std::accumulate(pool.begin(), pool.end(), 0.0);

  const auto stat_from_sum_a = [&](double sum_a) {
    return sum_a / na - (total - sum_a) / nb;
  };
  const double observed = stat_from_sum_a(std::accumulate(a.begin(), a.end(), 0.0));
  const double thresh = std::abs(observed);

  PermTestResult res;
  res.observed = observed;
  res.tail = PermTail::two_sided;
  res.seed = seed;
  detail::NullAccumulator acc;

  const std::uint64_t n_assign = detail::choose_capped(n, na, static_cast<std::uint64_t>(n_perm));
  if (!force_sampled && n_assign <= static_cast<std::uint64_t>(n_perm)) {
    res.exhaustive = true;
    // lexicographic enumeration of the index subsets assigned to group a
    std::vector<int> sel(static_cast<std::size_t>(na));
    std::iota(sel.begin(), sel.end(), 0);
    for (;;) {
      double sum_a = 0.0;
      for (int i : sel) sum_a += pool[static_cast<std::size_t>(i)];
      const double stat = stat_from_sum_a(sum_a);
      acc.add(stat, std::abs(stat) >= thresh);
      int i = na - 1;
      while (i >= 0 && sel[static_cast<std::size_t>(i)] == n - na + i) --i;
      if (i < 0) break;
      ++sel[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < na; ++j) sel[static_cast<std::size_t>(j)] = sel[static_cast<std::size_t>(j - 1)] + 1;
    }
  } else {
    res.exhaustive = false;
    std::vector<double> work(pool);
    for (int i = 0; i < n_perm; ++i) {
      Rng rng(derive_seed(seed, "perm.unpaired", static_cast<std::uint64_t>(i)));
      work = pool;
      rng.shuffle(work);
      const double sum_a = std::accumulate(work.begin(), work.begin() + na, 0.0);
      const double stat = stat_from_sum_a(sum_a);
      acc.add(stat, std::abs(stat) >= thresh);
    }
  }
  acc.finish(res);
  return res;
}

// One-tailed paired test: null from per-pair sign flips, p = proportion of
// permuted means <= observed.
inline PermTestResult perm_test_paired(const std::vector<double>& diffs, int n_perm = 5000,
                                       std::uint64_t seed = 0, bool force_sampled = false) {
  if (diffs.empty()) throw DataError("perm_test_paired: empty input");
  if (n_perm < 1) throw ConfigError("perm_test_paired: n_perm must be >= 1");
  const int n = static_cast<int>(diffs.size());
  const double inv_n = 1.0 / n;
  const double observed = std::accumulate(diffs.begin(), diffs.end(), 0.0) * inv_n;

  PermTestResult res;
  res.observed = observed;
  res.tail = PermTail::one_sided_leq;
  res.seed = seed;
  detail::NullAccumulator acc;

  const bool exhaustive = !force_sampled && n < 63 && (1ull << n) <= static_cast<std::uint64_t>(n_perm);
  if (exhaustive) {
    res.exhaustive = true;
    const std::uint64_t total = 1ull << n;
    for (std::uint64_t mask = 0; mask < total; ++mask) {
      double sum = 0.0;
      for (int i = 0; i < n; ++i)
        sum += (mask >> i) & 1u ? -diffs[static_cast<std::size_t>(i)] : diffs[static_cast<std::size_t>(i)];
      const double stat = sum * inv_n;
      acc.add(stat, stat <= observed);
    }
  } else {
    res.exhaustive = false;
    for (int i = 0; i < n_perm; ++i) {
      Rng rng(derive_seed(seed, "perm.paired", static_cast<std::uint64_t>(i)));
      double sum = 0.0;
      std::uint64_t bits = 0;
      for (int j = 0; j < n; ++j) {
        if (j % 64 == 0) bits = rng.next_u64();
        sum += (bits >> (j % 64)) & 1u ? -diffs[static_cast<std::size_t>(j)] : diffs[static_cast<std::size_t>(j)];
      }
      const double stat = sum * inv_n;
      acc.add(stat, stat <= observed);
    }
  }
  acc.finish(res);
  return res;
}

// ---------------------------------------------------------------- semi-partial

struct SemiPartialResult {
  std::string control_id;
  std::vector<double> r_semi;       // per rating dim
  std::vector<bool> degenerate;
  double alpha_residualizer = 0.0;  // median over full-set columns; 0 for an empty control
  std::vector<double> alpha_predictor;
};

// Residualize X_full against X_control (ridge fit on train, applied to both
// splits), then encode Y from the residuals. The residualizer alpha is chosen
// per full-set column by validation MSE: the prediction gets subtracted, so
// the metric must be scale-aware, and one shared alpha would under-subtract
// columns whose control-explainable share differs. Residual columns that come
// out numerically null are zeroed rather than re-amplified by the predictor's
// standardization. An empty control passes X_full through untouched, so the
// result equals the plain encoding exactly.
inline SemiPartialResult semipartial(const Eigen::MatrixXd& Xc_train, const Eigen::MatrixXd& Xc_test,
                                     const Eigen::MatrixXd& Xf_train, const Eigen::MatrixXd& Xf_test,
                                     const Eigen::MatrixXd& Y_train, const Eigen::MatrixXd& Y_test,
                                     const RidgeConfig& cfg, const std::string& control_id = {}) {
  if (Xc_train.rows() != Xf_train.rows() || Xf_train.rows() != Y_train.rows())
    throw DataError("semipartial: training rows misaligned");
  if (Xc_test.rows() != Xf_test.rows() || Xf_test.rows() != Y_test.rows())
    throw DataError("semipartial: test rows misaligned");

  SemiPartialResult out;
  out.control_id = control_id;

  Eigen::MatrixXd R_train, R_test;
  if (Xc_train.cols() == 0) {
    R_train = Xf_train;
    R_test = Xf_test;
  } else {
    const int n = static_cast<int>(Xf_train.rows());
    const int d_full = static_cast<int>(Xf_train.cols());
    const int n_alpha = static_cast<int>(cfg.alpha_grid.size());
    const FoldPlan plan = make_fold_plan(n, cfg);

    Eigen::MatrixXd sse = Eigen::MatrixXd::Zero(n_alpha, d_full);
    for (int cell = 0; cell < plan.n_cells(); ++cell) {
      const auto& val_rows = plan.val_folds[static_cast<std::size_t>(cell)];
      const auto tr_rows = detail::complement_rows(n, val_rows);
      const Eigen::MatrixXd Xc_tr_raw = detail::take_rows(Xc_train, tr_rows);
      const Eigen::MatrixXd Xf_tr_raw = detail::take_rows(Xf_train, tr_rows);
      const auto cs = zscore_fit(Xc_tr_raw);
      const auto fs = zscore_fit(Xf_tr_raw);
      const Eigen::MatrixXd Xc_tr = zscore_apply(Xc_tr_raw, cs);
      const Eigen::MatrixXd Xc_va = zscore_apply(detail::take_rows(Xc_train, val_rows), cs);
      const Eigen::MatrixXd Xf_va = zscore_apply(detail::take_rows(Xf_train, val_rows), fs);
      const detail::RidgeSweep sweep(Xc_tr, zscore_apply(Xf_tr_raw, fs));
      for (int ai = 0; ai < n_alpha; ++ai)
        sse.row(ai) += (Xc_va * sweep.fit(cfg.alpha_grid[static_cast<std::size_t>(ai)]) - Xf_va)
                           .array()
                           .square()
                           .colwise()
                           .sum()
                           .matrix();
    }
    std::vector<int> alpha_idx(static_cast<std::size_t>(d_full), 0);
    for (int j = 0; j < d_full; ++j)
      for (int ai = 1; ai < n_alpha; ++ai)
        if (sse(ai, j) < sse(alpha_idx[static_cast<std::size_t>(j)], j))
          alpha_idx[static_cast<std::size_t>(j)] = ai;
    {
      std::vector<double> alphas;
      alphas.reserve(alpha_idx.size());
      for (int ai : alpha_idx) alphas.push_back(cfg.alpha_grid[static_cast<std::size_t>(ai)]);
      std::nth_element(alphas.begin(), alphas.begin() + alphas.size() / 2, alphas.end());
      out.alpha_residualizer = alphas[alphas.size() / 2];
    }

    const auto cs = zscore_fit(Xc_train);
    const auto fs = zscore_fit(Xf_train);
    const Eigen::MatrixXd Xc_tr = zscore_apply(Xc_train, cs);
    const Eigen::MatrixXd Xf_tr = zscore_apply(Xf_train, fs);
    const Eigen::MatrixXd Xc_te = zscore_apply(Xc_test, cs);
    const Eigen::MatrixXd Xf_te = zscore_apply(Xf_test, fs);
    R_train = Xf_tr;
    R_test = Xf_te;
    const detail::RidgeSweep sweep(Xc_tr, Xf_tr);
    for (int ai = 0; ai < n_alpha; ++ai) {
      const bool used = std::find(alpha_idx.begin(), alpha_idx.end(), ai) != alpha_idx.end();
      if (!used) continue;
      const Eigen::MatrixXd W = sweep.fit(cfg.alpha_grid[static_cast<std::size_t>(ai)]);
      const Eigen::MatrixXd P_tr = Xc_tr * W;
      const Eigen::MatrixXd P_te = Xc_te * W;
      for (int j = 0; j < d_full; ++j)
        if (alpha_idx[static_cast<std::size_t>(j)] == ai) {
          R_train.col(j) -= P_tr.col(j);
          R_test.col(j) -= P_te.col(j);
        }
    }
    // columns residualized down to numerical noise carry no information;
    // zero them so standardization cannot blow the junk back up
    for (int j = 0; j < d_full; ++j) {
      const double var = (R_train.col(j).array() - R_train.col(j).mean()).square().mean();
      if (var < 1e-12) {
        R_train.col(j).setZero();
        R_test.col(j).setZero();
      }
    }
  }

  const auto sel = cv_select({{"residual", R_train}}, Y_train, cfg);
  out.r_semi.resize(sel.size());
  out.degenerate.resize(sel.size());
  out.alpha_predictor.resize(sel.size());
  for (std::size_t d = 0; d < sel.size(); ++d) {
    const auto ev = evaluate(R_train, Y_train.col(static_cast<Eigen::Index>(d)), R_test,
                             Y_test.col(static_cast<Eigen::Index>(d)), sel[d].alpha);
    out.alpha_predictor[d] = sel[d].alpha;
    out.r_semi[d] = ev.per_dim[0].r;
    out.degenerate[d] = ev.per_dim[0].degenerate;
  }
  return out;
}

// ---------------------------------------------------------------- reliability

struct ReliabilityResult {
  std::string rating_dim;
  double r_split_half = 0.0;
  int n_splits = 0;
  bool spearman_brown = true;
  int n_clips_used = 0;
  int n_clips_excluded = 0;  // clips with fewer than 2 ratings
};

// ratings: clips x raters, NaN marks missing. Each split halves the rater set;
// per-clip half-means are correlated across clips and Spearman-Brown corrected.
inline ReliabilityResult split_half_reliability(const Eigen::MatrixXd& ratings, int n_splits = 100,
                                                std::uint64_t seed = 0, bool spearman_brown = true) {
  if (n_splits < 1) throw ConfigError("split_half_reliability: n_splits must be >= 1");
  const int n_raters = static_cast<int>(ratings.cols());
  if (n_raters < 2) throw DataError("split_half_reliability: need at least 2 raters");

  std::vector<int> clips;
  int excluded = 0;
  for (Eigen::Index c = 0; c < ratings.rows(); ++c) {
    int have = 0;
    for (Eigen::Index r = 0; r < n_raters; ++r)
      if (std::isfinite(ratings(c, r))) ++have;
    if (have >= 2)
      clips.push_back(static_cast<int>(c));
    else
      ++excluded;
  }
  if (clips.size() < 2) throw DataError("split_half_reliability: fewer than 2 usable clips");

  double sum_r = 0.0;
  int splits_done = 0;
  for (int s = 0; s < n_splits; ++s) {
    std::vector<int> order(static_cast<std::size_t>(n_raters));
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(seed, "reliability", static_cast<std::uint64_t>(s)));
    rng.shuffle(order);
    const int half = n_raters / 2;

    std::vector<double> m1, m2;
    m1.reserve(clips.size());
    m2.reserve(clips.size());
    for (int c : clips) {
      double s1 = 0.0, s2 = 0.0;
      int k1 = 0, k2 = 0;
      for (int i = 0; i < n_raters; ++i) {
        const double v = ratings(c, order[static_cast<std::size_t>(i)]);
        if (!std::isfinite(v)) continue;
        if (i < half) {
          s1 += v;
          ++k1;
        } else {
          s2 += v;
          ++k2;
        }
      }
      if (k1 == 0 || k2 == 0) continue;  // clip not covered by both halves this split
      m1.push_back(s1 / k1);
      m2.push_back(s2 / k2);
    }
    if (m1.size() < 2) continue;
    const auto pr = pearson(Eigen::Map<const Eigen::VectorXd>(m1.data(), static_cast<Eigen::Index>(m1.size())),
                            Eigen::Map<const Eigen::VectorXd>(m2.data(), static_cast<Eigen::Index>(m2.size())));
    double r = pr.r;
    if (spearman_brown && !pr.degenerate) {
      r = (1.0 + r > 1e-12) ? 2.0 * r / (1.0 + r) : -1.0;
      r = std::clamp(r, -1.0, 1.0);
    }
    sum_r += r;
    ++splits_done;
  }
  if (splits_done == 0) throw DataError("split_half_reliability: no split produced enough covered clips");

  ReliabilityResult out;
  out.r_split_half = sum_r / splits_done;
  out.n_splits = splits_done;
  out.spearman_brown = spearman_brown;
  out.n_clips_used = static_cast<int>(clips.size());
  out.n_clips_excluded = excluded;
  return out;
}

// ---------------------------------------------------------------- summaries

inline std::vector<double> delta_r(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("delta_r: dimension mismatch");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

// Pearson r across (human-judgment r, pose-prediction r) pairs.
inline double score_relationship(const std::vector<std::pair<double, double>>& pairs) {
  if (pairs.size() < 2) throw DataError("score_relationship: need at least 2 pairs");
  Eigen::VectorXd x(static_cast<Eigen::Index>(pairs.size())), y(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    x[static_cast<Eigen::Index>(i)] = pairs[i].first;
    y[static_cast<Eigen::Index>(i)] = pairs[i].second;
  }
  return pearson_r(x, y);
}

}  // namespace sociopose
