#pragma once

// Leak-free standardized ridge regression with cross-validated layer and
// alpha selection, scored by Pearson r on a frozen held-out split.
//
// Standardization statistics always come from the training rows of whatever
// context is active (a CV fold or the full training set) and are applied to
// both sides. No intercept is fit: on z-scored features and targets it is
// zero by construction.

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "sociopose/common.hpp"
#include "sociopose/rng.hpp"

namespace sociopose {

// ---------------------------------------------------------------- z-scoring

struct StandardizationStats {
  Eigen::RowVectorXd means;
  Eigen::RowVectorXd stds;  // population convention; constant columns guarded to 1
};

inline StandardizationStats zscore_fit(const Eigen::MatrixXd& X) {
  const auto n = X.rows();
  if (n < 2) throw DataError("zscore_fit: need at least 2 rows, got " + std::to_string(n));
  StandardizationStats s;
  s.means = X.colwise().mean();
  const Eigen::MatrixXd centered = X.rowwise() - s.means;
  s.stds = (centered.array().square().colwise().sum() / static_cast<double>(n)).sqrt();
  for (Eigen::Index j = 0; j < s.stds.size(); ++j)
    if (s.stds[j] < 1e-12) s.stds[j] = 1.0;
  return s;
}

inline Eigen::MatrixXd zscore_apply(const Eigen::MatrixXd& X, const StandardizationStats& s) {
  if (X.cols() != s.means.size())
    throw DataError("zscore_apply: column count mismatch (" + std::to_string(X.cols()) + " vs " +
                    std::to_string(s.means.size()) + ")");
  return (X.rowwise() - s.means).array().rowwise() / s.stds.array();
}

// ---------------------------------------------------------------- ridge solve

namespace detail {

inline void check_finite(const Eigen::MatrixXd& M, const char* name) {
  if (!M.allFinite()) throw NumericError(std::string("non-finite values in ") + name);
}

inline Eigen::MatrixXd solve_spd(Eigen::MatrixXd A, const Eigen::MatrixXd& B, double alpha) {
  A.diagonal().array() += alpha;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(A);
  if (ldlt.info() != Eigen::Success)
    throw NumericError("ridge solve failed (alpha=" + dtos(alpha) +
                       ", dim=" + std::to_string(A.rows()) + ")");
  const Eigen::MatrixXd W = ldlt.solve(B);
  if (!W.allFinite()) {
    const double dmax = ldlt.vectorD().maxCoeff();
    const double dmin = ldlt.vectorD().minCoeff();
    throw NumericError("ridge solve produced non-finite weights (alpha=" + dtos(alpha) +
                       ", D range [" + dtos(dmin) + ", " + dtos(dmax) + "])");
  }
  return W;
}

}  // namespace detail

// (X^T X + alpha I) W = X^T Y, evaluated through the SVD of X: with X = U S V^T
// the solution is V diag(s / (s^2 + alpha)) U^T Y. Forming X^T X would square
// the condition number and lose the tiny-alpha end of the grid.
inline Eigen::MatrixXd ridge_fit_primal(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                        double alpha) {
  detail::check_finite(X, "X");
  detail::check_finite(Y, "Y");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd& sv = svd.singularValues();
  Eigen::VectorXd factors(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    const double denom = sv[i] * sv[i] + alpha;
    factors[i] = denom > 0.0 ? sv[i] / denom : 0.0;  // pseudo-inverse at alpha = 0
  }
  const Eigen::MatrixXd W = svd.matrixV() * factors.asDiagonal() * (svd.matrixU().transpose() * Y);
  if (!W.allFinite())
    throw NumericError("ridge primal solve produced non-finite weights (alpha=" + dtos(alpha) +
                       ", singular values [" + dtos(sv.minCoeff()) + ", " + dtos(sv.maxCoeff()) + "])");
  return W;
}

// W = X^T (X X^T + alpha I)^{-1} Y; equivalent to the primal form.
inline Eigen::MatrixXd ridge_fit_dual(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                      double alpha) {
  detail::check_finite(X, "X");
  detail::check_finite(Y, "Y");
  return X.transpose() * detail::solve_spd(X * X.transpose(), Y, alpha);
}

inline Eigen::MatrixXd ridge_fit(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y, double alpha) {
  if (X.rows() != Y.rows())
    throw DataError("ridge_fit: X and Y row counts differ (" + std::to_string(X.rows()) + " vs " +
                    std::to_string(Y.rows()) + ")");
  if (alpha < 0.0) throw ConfigError("ridge_fit: alpha must be >= 0");
  // The dual form is only well-posed for d >= n (X X^T has full rank there).
  return (X.cols() > X.rows()) ? ridge_fit_dual(X, Y, alpha) : ridge_fit_primal(X, Y, alpha);
}

inline Eigen::MatrixXd ridge_predict(const Eigen::MatrixXd& X, const Eigen::MatrixXd& W) {
  if (X.cols() != W.rows())
    throw DataError("ridge_predict: dimension mismatch (" + std::to_string(X.cols()) + " vs " +
                    std::to_string(W.rows()) + ")");
  return X * W;
}

// ---------------------------------------------------------------- Pearson r

struct PearsonResult {
  double r = 0.0;
  bool degenerate = false;  // either side had variance < 1e-24
};

inline PearsonResult pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (a.size() != b.size()) throw DataError("pearson: length mismatch");
  if (a.size() < 2) throw DataError("pearson: need at least 2 values");
  const double n = static_cast<double>(a.size());
  const Eigen::VectorXd da = a.array() - a.mean();
  const Eigen::VectorXd db = b.array() - b.mean();
  const double va = da.squaredNorm() / n;
  const double vb = db.squaredNorm() / n;
  if (va < 1e-24 || vb < 1e-24) return {0.0, true};
  return {da.dot(db) / std::sqrt(da.squaredNorm() * db.squaredNorm()), false};
}

inline double pearson_r(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return pearson(a, b).r;
}

// ---------------------------------------------------------------- CV plumbing

inline std::vector<double> default_alpha_grid() {
  std::vector<double> g;
  g.reserve(21);
  for (int e = -10; e <= 10; ++e) g.push_back(std::pow(10.0, e));
  return g;
}

struct RidgeConfig {
  std::vector<double> alpha_grid = default_alpha_grid();
  int n_folds = 5;
  int n_repeats = 2;
  std::uint64_t seed = 0;

  void validate() const {
    if (alpha_grid.empty()) throw ConfigError("alpha_grid must be non-empty");
    for (std::size_t i = 0; i < alpha_grid.size(); ++i) {
      if (!(alpha_grid[i] > 0.0)) throw ConfigError("alpha_grid values must be positive");
      if (i > 0 && !(alpha_grid[i] > alpha_grid[i - 1]))
        throw ConfigError("alpha_grid must be strictly increasing");
    }
    if (n_folds < 2) throw ConfigError("n_folds must be >= 2");
    if (n_repeats < 1) throw ConfigError("n_repeats must be >= 1");
  }
};

// Disjoint, exhaustive validation folds per repeat; shuffled with the
// repeat-derived stream hash(seed, "cv", repeat).
struct FoldPlan {
  int n_rows = 0;
  int n_folds = 0;
  int n_repeats = 0;
  std::vector<std::vector<int>> val_folds;  // [repeat * n_folds + fold] -> sorted row indices

  int n_cells() const { return n_folds * n_repeats; }
};

inline FoldPlan make_fold_plan(int n_rows, const RidgeConfig& cfg) {
  cfg.validate();
  if (n_rows < cfg.n_folds)
    throw DataError("fold plan: " + std::to_string(n_rows) + " rows < " +
                    std::to_string(cfg.n_folds) + " folds");
  FoldPlan plan;
  plan.n_rows = n_rows;
  plan.n_folds = cfg.n_folds;
  plan.n_repeats = cfg.n_repeats;
  for (int r = 0; r < cfg.n_repeats; ++r) {
    std::vector<int> idx(static_cast<std::size_t>(n_rows));
    std::iota(idx.begin(), idx.end(), 0);
    Rng rng(derive_seed(cfg.seed, "cv", static_cast<std::uint64_t>(r)));
    rng.shuffle(idx);
    const int base = n_rows / cfg.n_folds;
    const int extra = n_rows % cfg.n_folds;
    int pos = 0;
    for (int f = 0; f < cfg.n_folds; ++f) {
      const int sz = base + (f < extra ? 1 : 0);
      std::vector<int> fold(idx.begin() + pos, idx.begin() + pos + sz);
      std::sort(fold.begin(), fold.end());
      plan.val_folds.push_back(std::move(fold));
      pos += sz;
    }
  }
  return plan;
}

namespace detail {

inline Eigen::MatrixXd take_rows(const Eigen::MatrixXd& X, const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), X.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = X.row(rows[i]);
  return out;
}

inline std::vector<int> complement_rows(int n, const std::vector<int>& sorted_rows) {
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n) - sorted_rows.size());
  std::size_t k = 0;
  for (int i = 0; i < n; ++i) {
    if (k < sorted_rows.size() && sorted_rows[k] == i) {
      ++k;
      continue;
    }
    out.push_back(i);
  }
  return out;
}

// Caches the Gram and cross products so an alpha sweep costs one SPD solve
// per grid point instead of re-forming the products.
class RidgeSweep {
 public:
  RidgeSweep(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y) : dual_(X.cols() > X.rows()) {
    check_finite(X, "X");
    check_finite(Y, "Y");
    if (dual_) {
      gram_ = X * X.transpose();
      rhs_ = Y;
      xt_ = X.transpose();
    } else {
      gram_ = X.transpose() * X;
      rhs_ = X.transpose() * Y;
    }
  }

  Eigen::MatrixXd fit(double alpha) const {
    const Eigen::MatrixXd c = solve_spd(gram_, rhs_, alpha);
    return dual_ ? Eigen::MatrixXd(xt_ * c) : c;
  }

 private:
  bool dual_;
  Eigen::MatrixXd gram_, rhs_, xt_;
};

}  // namespace detail

// ---------------------------------------------------------------- selection

struct Layer {
  std::string layer_id;
  Eigen::MatrixXd X;  // rows aligned with Y
};

struct CvSelection {
  std::string layer_id;
  double alpha = 0.0;
  double mean_r = 0.0;  // mean validation r over all CV cells
};

// Per target dimension: the (layer, alpha) maximizing mean validation r over
// the fold plan, standardization refit inside each fold. Ties break to the
// smaller alpha, then the lexicographically smaller layer_id.
inline std::vector<CvSelection> cv_select(const std::vector<Layer>& layers,
                                          const Eigen::MatrixXd& Y_train, const RidgeConfig& cfg) {
  if (layers.empty()) throw DataError("cv_select: no layers given");
  const int n = static_cast<int>(Y_train.rows());
  for (const auto& l : layers)
    if (l.X.rows() != n)
      throw DataError("cv_select: layer '" + l.layer_id + "' has " + std::to_string(l.X.rows()) +
                      " rows, targets have " + std::to_string(n));
  const FoldPlan plan = make_fold_plan(n, cfg);
  const int t = static_cast<int>(Y_train.cols());
  const int n_alpha = static_cast<int>(cfg.alpha_grid.size());

  std::vector<CvSelection> best(static_cast<std::size_t>(t));
  std::vector<char> has_best(static_cast<std::size_t>(t), 0);

  for (const auto& layer : layers) {
    // mean_r[alpha_idx][dim], accumulated over cells
    Eigen::MatrixXd sum_r = Eigen::MatrixXd::Zero(n_alpha, t);
    for (int cell = 0; cell < plan.n_cells(); ++cell) {
      const auto& val_rows = plan.val_folds[static_cast<std::size_t>(cell)];
      const auto tr_rows = detail::complement_rows(n, val_rows);
      const Eigen::MatrixXd Xtr_raw = detail::take_rows(layer.X, tr_rows);
      const Eigen::MatrixXd Xva_raw = detail::take_rows(layer.X, val_rows);
      const Eigen::MatrixXd Ytr_raw = detail::take_rows(Y_train, tr_rows);
      const Eigen::MatrixXd Yva_raw = detail::take_rows(Y_train, val_rows);
      const auto xs = zscore_fit(Xtr_raw);
      const auto ys = zscore_fit(Ytr_raw);
      const Eigen::MatrixXd Xtr = zscore_apply(Xtr_raw, xs);
      const Eigen::MatrixXd Xva = zscore_apply(Xva_raw, xs);
      const Eigen::MatrixXd Ytr = zscore_apply(Ytr_raw, ys);
      const detail::RidgeSweep sweep(Xtr, Ytr);
      for (int ai = 0; ai < n_alpha; ++ai) {
        const Eigen::MatrixXd pred = Xva * sweep.fit(cfg.alpha_grid[static_cast<std::size_t>(ai)]);
        for (int d = 0; d < t; ++d)
          sum_r(ai, d) += pearson(pred.col(d), Yva_raw.col(d)).r;  // degenerate folds count 0
      }
    }
    for (int d = 0; d < t; ++d) {
      for (int ai = 0; ai < n_alpha; ++ai) {
        const double mean_r = sum_r(ai, d) / plan.n_cells();
        const double alpha = cfg.alpha_grid[static_cast<std::size_t>(ai)];
        auto& b = best[static_cast<std::size_t>(d)];
        const bool better =
            !has_best[static_cast<std::size_t>(d)] || mean_r > b.mean_r ||
            (mean_r == b.mean_r &&
             (alpha < b.alpha || (alpha == b.alpha && layer.layer_id < b.layer_id)));
        if (better) {
          b = {layer.layer_id, alpha, mean_r};
          has_best[static_cast<std::size_t>(d)] = 1;
        }
      }
    }
  }
  return best;
}

// One shared alpha for a multi-target fit: maximizes the mean validation r
// across *all* target columns. Ties break to the smaller alpha.
inline CvSelection cv_alpha_shared(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y,
                                   const RidgeConfig& cfg) {
  const int n = static_cast<int>(Y.rows());
  if (X.rows() != n) throw DataError("cv_alpha_shared: row mismatch");
  const FoldPlan plan = make_fold_plan(n, cfg);
  const int n_alpha = static_cast<int>(cfg.alpha_grid.size());
  Eigen::VectorXd sum_r = Eigen::VectorXd::Zero(n_alpha);
  for (int cell = 0; cell < plan.n_cells(); ++cell) {
    const auto& val_rows = plan.val_folds[static_cast<std::size_t>(cell)];
    const auto tr_rows = detail::complement_rows(n, val_rows);
    const Eigen::MatrixXd Xtr_raw = detail::take_rows(X, tr_rows);
    const Eigen::MatrixXd Yva_raw = detail::take_rows(Y, val_rows);
    const auto xs = zscore_fit(Xtr_raw);
    const auto ys = zscore_fit(detail::take_rows(Y, tr_rows));
    const Eigen::MatrixXd Xtr = zscore_apply(Xtr_raw, xs);
    const Eigen::MatrixXd Xva = zscore_apply(detail::take_rows(X, val_rows), xs);
    const Eigen::MatrixXd Ytr = zscore_apply(detail::take_rows(Y, tr_rows), ys);
    const detail::RidgeSweep sweep(Xtr, Ytr);
    for (int ai = 0; ai < n_alpha; ++ai) {
      const Eigen::MatrixXd pred = Xva * sweep.fit(cfg.alpha_grid[static_cast<std::size_t>(ai)]);
      double mean = 0.0;
      for (Eigen::Index d = 0; d < Y.cols(); ++d) mean += pearson(pred.col(d), Yva_raw.col(d)).r;
      sum_r[ai] += mean / static_cast<double>(Y.cols());
    }
  }
  CvSelection best;
  bool have = false;
  for (int ai = 0; ai < n_alpha; ++ai) {
    const double mean_r = sum_r[ai] / plan.n_cells();
    if (!have || mean_r > best.mean_r) {
      best = {"", cfg.alpha_grid[static_cast<std::size_t>(ai)], mean_r};
      have = true;
    }
  }
  return best;
}

// ---------------------------------------------------------------- evaluation

struct EvalResult {
  double alpha = 0.0;
  std::vector<PearsonResult> per_dim;
  int n_test = 0;
};

// Standardize on the full training split, fit at the chosen alpha, score the
// held-out test split per target dimension.
inline EvalResult evaluate(const Eigen::MatrixXd& X_train, const Eigen::MatrixXd& Y_train,
                           const Eigen::MatrixXd& X_test, const Eigen::MatrixXd& Y_test,
                           double alpha) {
  if (X_train.cols() != X_test.cols() || Y_train.cols() != Y_test.cols())
    throw DataError("evaluate: train/test column mismatch");
  const auto xs = zscore_fit(X_train);
  const auto ys = zscore_fit(Y_train);
  const Eigen::MatrixXd W =
      ridge_fit(zscore_apply(X_train, xs), zscore_apply(Y_train, ys), alpha);
  const Eigen::MatrixXd pred = zscore_apply(X_test, xs) * W;
  EvalResult out;
  out.alpha = alpha;
  out.n_test = static_cast<int>(X_test.rows());
  out.per_dim.reserve(static_cast<std::size_t>(Y_test.cols()));
  for (Eigen::Index d = 0; d < Y_test.cols(); ++d)
    out.per_dim.push_back(pearson(pred.col(d), Y_test.col(d)));
  return out;
}

}  // namespace sociopose
