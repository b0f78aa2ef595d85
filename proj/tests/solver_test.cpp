#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <thread>
#include <rescurve/problems.hpp>
#include <rescurve/solver.hpp>

#include "oracles.hpp"

using namespace rescurve;

namespace {

Problem<double> densify(const Problem<double>& p) {
  const auto& sigma = p.op.diagonal().singular_values();
  MatrixX<double> a = MatrixX<double>::Zero(sigma.size(), sigma.size());
  for (Index i = 0; i < sigma.size(); ++i) a(i, i) = sigma[i];
  Problem<double> out{Operator<double>(DenseOperator<double>(a)), p.x_true, p.y_exact,
                      p.y_noisy, p.delta_true, p.meta};
  return out;
}

Problem<double> random_dense_problem(Index m, Index n, unsigned seed) {
  auto a = oracle::random_matrix(m, n, seed);
  Operator<double> op{DenseOperator<double>(a).normalized()};
  Problem<double> p{std::move(op), std::nullopt, std::nullopt,
                    oracle::random_vector(m, seed + 1), std::nullopt, {}};
  p.meta.kind = "external";
  p.meta.n = n;
  return p;
}

}  // namespace

TEST_CASE("alpha grid is geometric and decreasing") {
  const AlphaGrid grid{};
  const auto v = grid.values();
  REQUIRE(v.size() == 121);
  CHECK(v.front() == 1.0);
  CHECK(std::abs(v.back() / 1e-12 - 1.0) <= 1e-12);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i] < v[i - 1]);

  CHECK_THROWS_AS((AlphaGrid{1.0, 1.5, 10}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((AlphaGrid{-1.0, 0.5, 10}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((AlphaGrid{1.0, 0.5, 0}).validate(), std::invalid_argument);
}

TEST_CASE("spectral solve matches the closed-form filter") {
  VectorX<double> sigma(1), y(1);
  sigma << 1.0;
  y << 1.0;
  Problem<double> p{Operator<double>(DiagonalOperator<double>(sigma)), std::nullopt, std::nullopt, y,
                    std::nullopt, {}};
  const auto pt = tikhonov_spectral(p, 1.0);
  CHECK(pt.x[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pt.residual_norm == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("spectral solve on a two-component problem") {
  VectorX<double> sigma(2), y(2);
  sigma << 1.0, 0.5;
  y << 1.0, 1.0;
  Problem<double> p{Operator<double>(DiagonalOperator<double>(sigma)), std::nullopt, std::nullopt, y,
                    std::nullopt, {}};
  const auto pt = tikhonov_spectral(p, 1.0);
  CHECK(pt.x[0] == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(pt.x[1] == doctest::Approx(0.4).epsilon(1e-15));
  CHECK(pt.residual_norm == doctest::Approx(std::sqrt(0.25 + 0.64)).epsilon(1e-15));
  CHECK_THROWS_AS(tikhonov_spectral(p, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(tikhonov_spectral(p, -1.0), std::invalid_argument);
}

TEST_CASE("first-order identity holds to roundoff on the spectral path") {
  const auto p = add_noise(make_model_problem(2.0, 2.0, 512), {0.005, 5});
  for (double alpha : {1.0, 1e-3, 1e-6, 1e-9, 1e-12}) {
    const auto pt = tikhonov_spectral(p, alpha);
    CHECK(pt.gradient_norm / (alpha * pt.solution_norm) == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("shifted CG reproduces the spectral solution on a densified problem") {
  const auto diag = make_model_problem(2.0, 2.0, 3);
  const auto dense = densify(diag);
  const AlphaGrid grid{1.0, std::pow(10.0, -0.5), 13};
  const auto got = tikhonov_cg_shifted(dense, grid, {1e-12, 2000});
  const auto alphas = grid.values();
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    CHECK(got[i].converged);
    const auto want = tikhonov_spectral(diag, alphas[i]);
    CHECK((got[i].x - want.x).norm() <= 1e-8 * want.x.norm());
  }
}

TEST_CASE("shifted CG matches direct elimination on a random rectangular problem") {
  const auto p = random_dense_problem(30, 20, 123);
  const std::vector<double> shifts{1.0, 1e-2, 1e-4};
  const auto got = tikhonov_cg_shifted(p, shifts, {1e-12, 2000});
  for (std::size_t i = 0; i < shifts.size(); ++i) {
    CHECK(got[i].converged);
    const auto want = oracle::direct_tikhonov(p.op.dense().matrix(), p.y_noisy, shifts[i]);
    CHECK((got[i].x - want).norm() <= 1e-8 * want.norm());
  }
}

TEST_CASE("huge shifts converge almost immediately") {
  const auto p = random_dense_problem(12, 8, 7);
  const auto got = tikhonov_cg_shifted(p, std::vector<double>{1e6}, {1e-8, 100});
  CHECK(got[0].converged);
  CHECK(got[0].iterations <= 2);
  const VectorX<double> want = p.op.apply_adjoint(p.y_noisy) / 1e6;
  CHECK((got[0].x - want).norm() <= 1e-5 * want.norm());
}

TEST_CASE("unconverged shifts are flagged, not silently returned") {
  const auto p = random_dense_problem(16, 12, 99);
  const auto got = tikhonov_cg_shifted(p, std::vector<double>{1e-8}, {1e-14, 1});
  CHECK_FALSE(got[0].converged);
}

TEST_CASE("sweep dispatches by operator kind and keeps grid order") {
  const auto diag = add_noise(make_model_problem(2.0, 0.5, 128), {0.005, 3});
  const AlphaGrid grid{1.0, std::pow(10.0, -0.2), 31};
  const auto s = sweep(diag, grid);
  REQUIRE(s.points.size() == 31);
  const auto alphas = grid.values();
  for (std::size_t i = 0; i < alphas.size(); ++i) CHECK(s.points[i].alpha == alphas[i]);

  const auto dense = densify(diag);
  const auto sd = sweep(dense, grid, {1e-12, 4000});
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    CHECK(sd.points[i].converged);
    CHECK((sd.points[i].x - s.points[i].x).norm() <= 1e-8 * s.points[i].x.norm());
  }
}

TEST_CASE("sweep invariants: monotone residual and solution norms, bounded residual") {
  const auto p = add_noise(make_model_problem(2.0, 2.0, 1024), {0.005, 42});
  const auto s = sweep(p, {});
  const double ynorm = s.data_norm;
  for (std::size_t i = 0; i < s.points.size(); ++i) {
    CHECK(s.points[i].residual_norm <= ynorm + 1e-9);
    if (i > 0) {
      CHECK(s.points[i].residual_norm <= s.points[i - 1].residual_norm + 1e-9);
      CHECK(s.points[i].solution_norm >= s.points[i - 1].solution_norm - 1e-9);
    }
  }
}

TEST_CASE("noise-free residuals decrease strictly along the grid") {
  const auto p = make_model_problem(2.0, 2.0, 4096);
  const auto s = sweep(p, {});
  for (std::size_t i = 1; i < s.points.size(); ++i)
    CHECK(s.points[i].residual_norm < s.points[i - 1].residual_norm);
}

TEST_CASE("log-log residual slope stays within [0, 1]") {
  const auto p = add_noise(make_model_problem(2.0, 2.0, 512), {0.01, 11});
  const auto s = sweep(p, {});
  for (std::size_t i = 1; i < s.points.size(); ++i) {
    const double dr = std::log(s.points[i].residual_norm / s.points[i - 1].residual_norm) /
                      std::log(s.points[i].alpha / s.points[i - 1].alpha);
    CHECK(dr >= -1e-6);
    CHECK(dr <= 1.0 + 1e-6);
  }
}

TEST_CASE("single-point grid equals a direct solve") {
  const auto p = make_model_problem(2.0, 2.0, 64);
  const AlphaGrid grid{0.5, 0.1, 1};
  const auto s = sweep(p, grid);
  REQUIRE(s.points.size() == 1);
  const auto want = tikhonov_spectral(p, 0.5);
  CHECK(s.points[0].x == want.x);
}

TEST_CASE("direct gradient evaluation agrees with the stationarity value at moderate alpha") {
  const auto p = random_dense_problem(25, 15, 31);
  for (double alpha : {1.0, 1e-2, 1e-4}) {
    const auto pt = tikhonov_solve(p, alpha, {1e-12, 4000});
    const double direct = p.op.apply_adjoint(p.op.apply(pt.x) - p.y_noisy).norm();
    CHECK(direct == doctest::Approx(alpha * pt.solution_norm).epsilon(1e-6));
  }
}

TEST_CASE("modelling-error floor enters the residual in quadrature") {
  auto p = add_noise(make_model_problem(2.0, 2.0, 64), {0.01, 4, 0.5});
  const double floor = p.meta.delta_meas;
  REQUIRE(floor > 0);
  const auto s = sweep(p, {});
  for (const auto& pt : s.points) CHECK(pt.residual_norm >= floor - 1e-12);
}

TEST_CASE("concurrent spectral solves on shared problem data are deterministic") {
  const auto p = add_noise(make_model_problem(2.0, 2.0, 512), {0.005, 21});
  const auto alphas = AlphaGrid{1.0, std::pow(10.0, -0.25), 48}.values();
  std::vector<TikhonovPoint<double>> parallel(alphas.size());
  {
    std::vector<std::thread> workers;
    const std::size_t stripes = 4;
    for (std::size_t w = 0; w < stripes; ++w) {
      workers.emplace_back([&, w] {
        for (std::size_t i = w; i < alphas.size(); i += stripes)
          parallel[i] = tikhonov_spectral(p, alphas[i]);
      });
    }
    for (auto& t : workers) t.join();
  }
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    const auto seq = tikhonov_spectral(p, alphas[i]);
    CHECK(parallel[i].x == seq.x);
    CHECK(parallel[i].residual_norm == seq.residual_norm);
  }
}

TEST_CASE("zero datum gives the zero minimizer for every shift") {
  MatrixX<double> a = oracle::random_matrix(6, 4, 17);
  Problem<double> p{Operator<double>(DenseOperator<double>(a)), std::nullopt, std::nullopt,
                    VectorX<double>::Zero(6), std::nullopt, {}};
  const auto got = tikhonov_cg_shifted(p, std::vector<double>{1.0, 1e-4}, {});
  for (const auto& pt : got) {
    CHECK(pt.converged);
    CHECK(pt.solution_norm == 0.0);
  }
}
