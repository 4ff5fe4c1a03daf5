#include <catch2/catch_amalgamated.hpp>

#include <Eigen/Core>
#include <cmath>

#include "sociopose/rng.hpp"
#include "sociopose/srp.hpp"

using namespace sociopose;
using Catch::Approx;

TEST_CASE("jl_min_dim reproduces the benchmark dimensionality") {
  CHECK(jl_min_dim(250, 0.1) == 4732);

  // direct formula oracle for a second point
  const double denom = 0.5 * 0.5 / 2.0 - 0.5 * 0.5 * 0.5 / 3.0;
  CHECK(jl_min_dim(2, 0.5) == static_cast<int>(std::floor(4.0 * std::log(2.0) / denom)));
  CHECK(jl_min_dim(2, 0.5) == 33);

  CHECK(jl_min_dim(1000, 0.1) > jl_min_dim(250, 0.1));  // ln is increasing

  CHECK_THROWS_AS(jl_min_dim(250, 0.0), ConfigError);
  CHECK_THROWS_AS(jl_min_dim(250, 1.0), ConfigError);
  CHECK_THROWS_AS(jl_min_dim(250, -0.1), ConfigError);
  CHECK_THROWS_AS(jl_min_dim(1, 0.1), ConfigError);
}

TEST_CASE("build_srp density and scale") {
  SRPConfig cfg;
  cfg.seed = 42;
  const auto P = build_srp(10000, cfg);
  CHECK(P.density == Approx(0.01).epsilon(1e-12));
  CHECK(P.scale == Approx(std::sqrt(1.0 / (0.01 * 4732))).epsilon(1e-12));
  CHECK(P.d_in == 10000);
  CHECK(P.d_out == 4732);

  // expected nonzero fraction within binomial tolerance (4 sigma)
  const double n_cells = 10000.0 * 4732.0;
  const double expect = n_cells * P.density;
  const double sigma = std::sqrt(n_cells * P.density * (1 - P.density));
  CHECK(std::abs(static_cast<double>(P.map.nonZeros()) - expect) < 4 * sigma);
}

TEST_CASE("build_srp is deterministic and boundary-dense") {
  SRPConfig cfg;
  cfg.seed = 7;
  cfg.target_dim = 50;
  const auto P1 = build_srp(300, cfg);
  const auto P2 = build_srp(300, cfg);
  CHECK(P1.map.nonZeros() == P2.map.nonZeros());
  CHECK((Eigen::MatrixXd(P1.map) - Eigen::MatrixXd(P2.map)).norm() == 0.0);

  cfg.seed = 8;
  const auto P3 = build_srp(300, cfg);
  CHECK((Eigen::MatrixXd(P1.map) - Eigen::MatrixXd(P3.map)).norm() != 0.0);

  // d_in = 1: density 1, every entry +-sqrt(1/d_out)
  cfg.target_dim = 16;
  const auto Pd = build_srp(1, cfg);
  CHECK(Pd.density == 1.0);
  CHECK(Pd.map.nonZeros() == 16);
  const Eigen::MatrixXd dense(Pd.map);
  for (int j = 0; j < 16; ++j) CHECK(std::abs(dense(0, j)) == Approx(std::sqrt(1.0 / 16)).epsilon(1e-12));
}

TEST_CASE("apply_srp is linear and guards dimensions") {
  SRPConfig cfg;
  cfg.seed = 3;
  cfg.target_dim = 40;
  const auto P = build_srp(200, cfg);

  const Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(5, 200);
  CHECK(apply_srp(Z, P).isZero(0.0));

  Rng rng(5);
  Eigen::MatrixXd X(6, 200), Y(6, 200);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  for (Eigen::Index i = 0; i < Y.size(); ++i) Y.data()[i] = rng.normal();
  const double a = 2.5, b = -1.25;
  const Eigen::MatrixXd lhs = apply_srp(a * X + b * Y, P);
  const Eigen::MatrixXd rhs = a * apply_srp(X, P) + b * apply_srp(Y, P);
  CHECK((lhs - rhs).norm() < 1e-10 * rhs.norm());

  CHECK_THROWS_AS(apply_srp(Eigen::MatrixXd::Zero(3, 100), P), DataError);
}

TEST_CASE("pass-through below the target dimension") {
  SRPConfig cfg;
  cfg.target_dim = 500;
  Rng rng(9);
  Eigen::MatrixXd X(4, 30);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();

  bool projected = true;
  const Eigen::MatrixXd out = srp_reduce(X, cfg, &projected);
  CHECK_FALSE(projected);
  CHECK(out == X);

  const auto P = build_srp(30, cfg);  // d_in <= d_out
  bool passed = false;
  CHECK(apply_srp(X, P, &passed) == X);
  CHECK(passed);
}

TEST_CASE("Monte-Carlo JL distance preservation at the benchmark operating point") {
  // 100 standard-normal points in 10,000 dims, projected to 4,732
  SRPConfig cfg;
  cfg.seed = 20240001;
  Rng rng(derive_seed(cfg.seed, "jl-points"));
  const int n = 100, d = 10000;
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = rng.normal();
  const Eigen::MatrixXd Xp = srp_reduce(X, cfg);
  REQUIRE(Xp.cols() == 4732);

  int ok = 0, total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double d0 = (X.row(i) - X.row(j)).squaredNorm();
      const double d1 = (Xp.row(i) - Xp.row(j)).squaredNorm();
      if (std::abs(d1 - d0) <= 0.15 * d0) ++ok;
      ++total;
    }
  CHECK(static_cast<double>(ok) / total >= 0.95);
}
