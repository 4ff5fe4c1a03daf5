#pragma once

// Sparse random projection to the fixed benchmark dimensionality.
//
// Target size follows the Johnson-Lindenstrauss bound; the projection matrix
// is the Achlioptas/Li sparse scheme with density 1/sqrt(d_in) and entries in
// {-v, 0, +v}, v = sqrt(1 / (density * d_out)). Inputs already at or below the
// target width pass through unchanged.

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sociopose/common.hpp"
#include "sociopose/rng.hpp"

namespace sociopose {

struct SRPConfig {
  double epsilon = 0.1;
  int target_dim = 4732;
  std::uint64_t seed = 0;
};

struct SRPMatrix {
  int d_in = 0;
  int d_out = 0;
  double density = 0.0;
  double scale = 0.0;  // v
  std::uint64_t seed = 0;
  Eigen::SparseMatrix<double> map;  // d_in x d_out
};

// floor(4 ln n / (eps^2/2 - eps^3/3)); n=250, eps=0.1 gives 4732.
inline int jl_min_dim(long n_samples, double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw ConfigError("jl_min_dim: epsilon must be in (0,1), got " + dtos(epsilon));
  if (n_samples < 2) throw ConfigError("jl_min_dim: n_samples must be >= 2");
  const double denom = epsilon * epsilon / 2.0 - epsilon * epsilon * epsilon / 3.0;
  return static_cast<int>(std::floor(4.0 * std::log(static_cast<double>(n_samples)) / denom));
}

inline SRPMatrix build_srp(int d_in, const SRPConfig& cfg) {
  if (d_in < 1) throw ConfigError("build_srp: d_in must be >= 1");
  if (cfg.target_dim < 1) throw ConfigError("build_srp: target_dim must be >= 1");
  SRPMatrix m;
  m.d_in = d_in;
  m.d_out = cfg.target_dim;
  m.density = 1.0 / std::sqrt(static_cast<double>(d_in));
  m.scale = std::sqrt(1.0 / (m.density * m.d_out));
  m.seed = cfg.seed;

  Rng rng(derive_seed(cfg.seed, "srp", static_cast<std::uint64_t>(d_in)));
  std::vector<Eigen::Triplet<double>> trips;
  const std::uint64_t total = static_cast<std::uint64_t>(d_in) * static_cast<std::uint64_t>(m.d_out);
  trips.reserve(static_cast<std::size_t>(static_cast<double>(total) * m.density * 1.1) + 16);

  // Skip-sampling over the flattened cell index: gaps between nonzeros are
  // geometric with success probability = density.
  const double log1mp = std::log1p(-m.density);  // -inf when density == 1
  std::uint64_t idx = 0;
  while (idx < total) {
    std::uint64_t gap = 0;
    if (m.density < 1.0) {
      const double u = rng.uniform();  // [0,1)
      gap = static_cast<std::uint64_t>(std::floor(std::log1p(-u) / log1mp));
    }
    if (gap >= total - idx) break;
    idx += gap;
    const double v = (rng.next_u64() & 1u) ? m.scale : -m.scale;
    trips.emplace_back(static_cast<int>(idx / m.d_out), static_cast<int>(idx % m.d_out), v);
    ++idx;
  }
  m.map.resize(d_in, m.d_out);
  m.map.setFromTriplets(trips.begin(), trips.end());
  return m;
}

// X (n x d_in) -> n x d_out. Identity pass-through when d_in <= d_out.
inline Eigen::MatrixXd apply_srp(const Eigen::MatrixXd& X, const SRPMatrix& P,
                                 bool* passed_through = nullptr) {
  if (X.cols() != P.d_in)
    throw DataError("apply_srp: X has " + std::to_string(X.cols()) + " columns, projection expects " +
                    std::to_string(P.d_in));
  if (P.d_in <= P.d_out) {
    if (passed_through) *passed_through = true;
    log_notice("srp: input width " + std::to_string(P.d_in) + " <= target " +
               std::to_string(P.d_out) + "; passing through unchanged");
    return X;
  }
  if (passed_through) *passed_through = false;
  return X * P.map;
}

// Projects only when the input is wider than the target dimension.
inline Eigen::MatrixXd srp_reduce(const Eigen::MatrixXd& X, const SRPConfig& cfg,
                                  bool* projected = nullptr) {
  if (X.cols() <= cfg.target_dim) {
    if (projected) *projected = false;
    return X;
  }
  if (projected) *projected = true;
  return apply_srp(X, build_srp(static_cast<int>(X.cols()), cfg));
}

}  // namespace sociopose
