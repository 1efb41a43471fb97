#include "gbps/static_posterior.hpp"

#include <cmath>
#include <vector>

#include "doctest.h"
#include "gbps/errors.hpp"
#include "oracles.hpp"

using namespace gbps;

namespace {

PredictiveEnsemble gaussians(const std::vector<double>& means, const std::vector<double>& vars) {
  std::vector<LossPredictive> experts;
  for (std::size_t j = 0; j < means.size(); ++j) {
    experts.push_back(LossPredictive::gaussian(means[j], vars[j]));
  }
  return PredictiveEnsemble(std::move(experts));
}

}  // namespace

TEST_CASE("analytic_log_weight closed form") {
  SUBCASE("degenerate point masses reduce to -<theta, m>") {
    CHECK(analytic_log_weight(SimplexWeights::vertex(2, 0), gaussians({1.0, 2.0}, {0.0, 0.0}),
                              1.0) == doctest::Approx(-1.0));
    CHECK(analytic_log_weight(SimplexWeights({0.5, 0.5}), gaussians({1.0, 3.0}, {0.0, 0.0}), 1.0) ==
          doctest::Approx(-2.0));
  }
  SUBCASE("variance enters through the MGF term") {
    CHECK(analytic_log_weight(SimplexWeights({0.5, 0.5}), gaussians({0.0, 0.0}, {2.0, 2.0}), 1.0) ==
          doctest::Approx(0.5));
  }
  SUBCASE("linear in each mean with slope -lambda theta_j") {
    const SimplexWeights theta({0.3, 0.7});
    const double lambda = 1.7;
    const double base = analytic_log_weight(theta, gaussians({0.4, -0.2}, {0.5, 0.25}), lambda);
    const double bumped =
        analytic_log_weight(theta, gaussians({0.4 + 0.1, -0.2}, {0.5, 0.25}), lambda);
    CHECK((bumped - base) / 0.1 == doctest::Approx(-lambda * theta[0]).epsilon(1e-9));
  }
  SUBCASE("linear in each variance with slope lambda^2 theta_j^2 / 2") {
    const SimplexWeights theta({0.3, 0.7});
    const double lambda = 1.7;
    const double base = analytic_log_weight(theta, gaussians({0.4, -0.2}, {0.5, 0.25}), lambda);
    const double bumped =
        analytic_log_weight(theta, gaussians({0.4, -0.2}, {0.5, 0.25 + 0.1}), lambda);
    CHECK((bumped - base) / 0.1 ==
          doctest::Approx(lambda * lambda * theta[1] * theta[1] / 2.0).epsilon(1e-9));
  }
  SUBCASE("rejects empirical experts and bad lambda") {
    std::vector<LossPredictive> mixed;
    mixed.push_back(LossPredictive::gaussian(0.0, 1.0));
    mixed.push_back(LossPredictive::empirical({0.5, 1.5}));
    CHECK_THROWS_AS(
        analytic_log_weight(SimplexWeights({0.5, 0.5}), PredictiveEnsemble(std::move(mixed)), 1.0),
        Error);
    CHECK_THROWS_AS(
        analytic_log_weight(SimplexWeights({0.5, 0.5}), gaussians({0.0, 0.0}, {1.0, 1.0}), 0.0),
        Error);
  }
}

TEST_CASE("ensemble_log_weight extends the analytic kernel") {
  SUBCASE("matches analytic_log_weight on Gaussian ensembles") {
    Rng rng(41);
    for (int trial = 0; trial < 30; ++trial) {
      std::vector<double> means(3), vars(3), alpha(3, 1.0);
      for (double& m : means) m = rng.normal();
      for (double& v : vars) v = rng.uniform();
      const auto theta = sample_dirichlet(alpha, rng);
      const auto ens = gaussians(means, vars);
      CHECK(ensemble_log_weight(theta, ens, 1.3) ==
            doctest::Approx(analytic_log_weight(theta, ens, 1.3)).epsilon(1e-12));
    }
  }
  SUBCASE("empirical experts use the exact atom average") {
    // log( (e^{-t*1} + e^{-t*3}) / 2 ) with t = lambda * theta_1 = 0.5
    std::vector<LossPredictive> experts;
    experts.push_back(LossPredictive::empirical({1.0, 3.0}));
    experts.push_back(LossPredictive::gaussian(0.0, 0.0));
    const PredictiveEnsemble ens(std::move(experts));
    CHECK_FALSE(ens.all_gaussian());
    CHECK(ens.expert(0).samples().size() == 2);
    CHECK_THROWS_AS(ens.expert(0).gaussian_params(), Error);
    const double expected = std::log((std::exp(-0.5) + std::exp(-1.5)) / 2.0);
    CHECK(ensemble_log_weight(SimplexWeights({0.5, 0.5}), ens, 1.0) ==
          doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("mc_log_weight") {
  SUBCASE("point masses are reproduced exactly with zero standard error") {
    std::vector<LossPredictive> experts;
    experts.push_back(LossPredictive::empirical({2.0}));
    experts.push_back(LossPredictive::empirical({-1.0}));
    const PredictiveEnsemble ens(std::move(experts));
    Rng rng(1);
    const auto mc = mc_log_weight(SimplexWeights({0.25, 0.75}), ens, 500, 2.0, rng);
    // -lambda * <theta, z0> = -2 * (0.5 - 0.75)
    CHECK(mc.estimate == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(mc.std_error == 0.0);
  }
  SUBCASE("agrees with the analytic kernel within 3 standard errors") {
    Rng instance_rng(2);
    int hits = 0;
    const int trials = 20;
    for (int trial = 0; trial < trials; ++trial) {
      std::vector<double> means(3), vars(3), alpha(3, 1.0);
      for (double& m : means) m = instance_rng.normal();
      for (double& v : vars) v = 0.1 + 0.9 * instance_rng.uniform();
      const auto theta = sample_dirichlet(alpha, instance_rng);
      const auto ens = gaussians(means, vars);
      Rng rng(100 + static_cast<std::uint64_t>(trial));
      const auto mc = mc_log_weight(theta, ens, 100000, 1.0, rng);
      const double exact = analytic_log_weight(theta, ens, 1.0);
      if (std::abs(mc.estimate - exact) <= 3.0 * mc.std_error) ++hits;
    }
    CHECK(hits >= trials - 1);
  }
  SUBCASE("deterministic per seed") {
    const auto ens = gaussians({0.1, -0.4}, {0.3, 0.8});
    Rng a(9), b(9);
    const auto mc1 = mc_log_weight(SimplexWeights({0.6, 0.4}), ens, 1000, 1.0, a);
    const auto mc2 = mc_log_weight(SimplexWeights({0.6, 0.4}), ens, 1000, 1.0, b);
    CHECK(mc1.estimate == mc2.estimate);
    CHECK(mc1.std_error == mc2.std_error);
  }
  SUBCASE("draw floor is enforced") {
    Rng rng(1);
    CHECK_THROWS_AS(
        mc_log_weight(SimplexWeights({0.5, 0.5}), gaussians({0.0, 0.0}, {1.0, 1.0}), 99, 1.0, rng),
        Error);
  }
}

TEST_CASE("sample_posterior") {
  PosteriorOptions opts;  // 5000 draws, 2000 burn-in

  SUBCASE("identical experts are exchangeable") {
    const auto ens = gaussians({0.3, 0.3}, {0.2, 0.2});
    const auto sample = sample_posterior(ens, std::vector<double>{1.0, 1.0}, opts, 11);
    const auto mean = posterior_mean(sample);
    CHECK(mean[0] == doctest::Approx(0.5).epsilon(0.06));  // +-0.03 absolute
    CHECK(std::abs(mean[0] - 0.5) < 0.03);
    CHECK(sample.acceptance_rate > 0.05);
    CHECK_FALSE(sample.degenerate_chain);
  }
  SUBCASE("a single expert collapses to the point simplex") {
    const auto ens = gaussians({0.3}, {0.2});
    const auto sample = sample_posterior(ens, std::vector<double>{1.0}, opts, 12);
    REQUIRE(sample.draws.size() == 5000);
    for (const auto& draw : sample.draws) CHECK(draw[0] == 1.0);
  }
  SUBCASE("matches the dense-grid oracle on random two-expert ensembles") {
    Rng instance_rng(13);
    for (int trial = 0; trial < 4; ++trial) {
      std::vector<double> means(2), vars(2);
      for (double& m : means) m = 1.5 * instance_rng.normal();
      for (double& v : vars) v = 0.05 + instance_rng.uniform();
      const std::vector<double> alpha{1.0, 1.0};
      const auto sample =
          sample_posterior(gaussians(means, vars), alpha, opts, 500 + static_cast<std::uint64_t>(trial));
      const auto mean = posterior_mean(sample);
      const auto grid = oracle::grid_posterior_mean_2(means, vars, opts.lambda, alpha);
      CHECK(std::abs(mean[0] - grid[0]) < 0.03);
    }
  }
  SUBCASE("matches the lattice oracle on a three-expert ensemble") {
    const std::vector<double> means{-0.8, 0.2, 0.6};
    const std::vector<double> vars{0.3, 0.5, 0.2};
    const std::vector<double> alpha{1.0, 1.0, 1.0};
    const auto sample = sample_posterior(gaussians(means, vars), alpha, opts, 77);
    const auto mean = posterior_mean(sample);
    const auto grid = oracle::grid_posterior_mean_3(means, vars, opts.lambda, alpha);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(mean[j] - grid[j]) < 0.03);
  }
  SUBCASE("dominant-expert instance agrees with its grid oracle") {
    // The favored expert gains weight, though at lambda = 1 the pull is mild:
    // the grid value is ~0.457 (closed form 0.4557 on the exact simplex).
    const std::vector<double> means{-1.0, 1.0, 1.0};
    const std::vector<double> vars{0.01, 0.01, 0.01};
    const std::vector<double> alpha{1.0, 1.0, 1.0};
    const auto grid = oracle::grid_posterior_mean_3(means, vars, 1.0, alpha);
    CHECK(grid[0] == doctest::Approx(0.4576).epsilon(0.01));
    const auto sample = sample_posterior(gaussians(means, vars), alpha, opts, 21);
    const auto mean = posterior_mean(sample);
    CHECK(std::abs(mean[0] - grid[0]) < 0.03);
    CHECK(mean[0] > 1.0 / 3.0);  // strictly above the prior mean
  }
  SUBCASE("posterior ordering: lowering a mean never lowers that weight") {
    const std::vector<double> vars{0.2, 0.2};
    const std::vector<double> alpha{1.0, 1.0};
    double previous = -1.0;
    for (double m1 : {0.5, 0.0, -0.5, -1.0}) {
      const std::vector<double> means{m1, 0.3};
      const auto grid = oracle::grid_posterior_mean_2(means, vars, 1.0, alpha);
      CHECK(grid[0] >= previous);
      previous = grid[0];
    }
  }
  SUBCASE("variance bonus ranks equal-mean grid points by sum theta_j^2 s_j^2") {
    // A property of the kernel itself: with equal means the density reduces
    // to exp(lambda^2/2 * sum theta_j^2 s_j^2).
    const std::vector<double> means{0.0, 0.0};
    const std::vector<double> vars{2.0, 0.5};
    const double lambda = 1.5;
    const auto ens = gaussians(means, vars);
    const auto lw = [&](double u) {
      return ensemble_log_weight(SimplexWeights({u, 1.0 - u}), ens, lambda);
    };
    const auto bonus = [&](double u) {
      return 0.5 * lambda * lambda * (u * u * vars[0] + (1.0 - u) * (1.0 - u) * vars[1]);
    };
    for (double a : {0.1, 0.3, 0.6, 0.9}) {
      for (double b : {0.2, 0.5, 0.8}) {
        CHECK((lw(a) < lw(b)) == (bonus(a) < bonus(b)));
      }
    }
  }
  SUBCASE("permuting experts permutes the grid posterior mean") {
    const std::vector<double> alpha{1.0, 1.0, 1.0};
    const std::vector<double> m1{-0.4, 0.1, 0.8}, v1{0.3, 0.6, 0.1};
    const auto grid = oracle::grid_posterior_mean_3(m1, v1, 1.0, alpha);
    const std::vector<double> m2{0.8, -0.4, 0.1}, v2{0.1, 0.3, 0.6};
    const auto permuted = oracle::grid_posterior_mean_3(m2, v2, 1.0, alpha);
    CHECK(permuted[0] == doctest::Approx(grid[2]).epsilon(1e-9));
    CHECK(permuted[1] == doctest::Approx(grid[0]).epsilon(1e-9));
    CHECK(permuted[2] == doctest::Approx(grid[1]).epsilon(1e-9));
  }
  SUBCASE("empirical ensembles sample deterministically") {
    std::vector<LossPredictive> experts;
    experts.push_back(LossPredictive::empirical({0.1, 0.4, -0.2}));
    experts.push_back(LossPredictive::gaussian(0.2, 0.1));
    const PredictiveEnsemble ens(std::move(experts));
    PosteriorOptions small = opts;
    small.n_samples = 500;
    small.burn_in = 200;
    const auto a = sample_posterior(ens, std::vector<double>{1.0, 1.0}, small, 33);
    const auto b = sample_posterior(ens, std::vector<double>{1.0, 1.0}, small, 33);
    CHECK(posterior_mean(a)[0] == posterior_mean(b)[0]);
    CHECK(a.acceptance_rate == b.acceptance_rate);
    CHECK(a.seed == 33);
  }
  SUBCASE("input validation") {
    const auto ens = gaussians({0.0, 0.0}, {1.0, 1.0});
    CHECK_THROWS_AS(sample_posterior(ens, std::vector<double>{1.0}, opts, 1), Error);
    CHECK_THROWS_AS(sample_posterior(ens, std::vector<double>{1.0, -1.0}, opts, 1), Error);
    PosteriorOptions bad = opts;
    bad.n_samples = 0;
    CHECK_THROWS_AS(sample_posterior(ens, std::vector<double>{1.0, 1.0}, bad, 1), Error);
  }
}

TEST_CASE("posterior_mean and posterior_stddev") {
  SUBCASE("two vertex draws average to the center") {
    PosteriorSample sample;
    sample.draws = {SimplexWeights({1.0, 0.0}), SimplexWeights({0.0, 1.0})};
    const auto mean = posterior_mean(sample);
    CHECK(mean[0] == doctest::Approx(0.5));
    const auto sd = posterior_stddev(sample);
    CHECK(sd[0] == doctest::Approx(0.5));
  }
  SUBCASE("constant draws average to themselves") {
    PosteriorSample sample;
    sample.draws.assign(10, SimplexWeights({0.25, 0.75}));
    const auto mean = posterior_mean(sample);
    CHECK(mean[0] == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(posterior_stddev(sample)[0] == doctest::Approx(0.0));
  }
  SUBCASE("Dirichlet(1,1,1) draws average to the barycenter") {
    Rng rng(55);
    PosteriorSample sample;
    const std::vector<double> alpha{1.0, 1.0, 1.0};
    for (int i = 0; i < 10000; ++i) sample.draws.push_back(sample_dirichlet(alpha, rng));
    const auto mean = posterior_mean(sample);
    for (std::size_t j = 0; j < 3; ++j) CHECK(std::abs(mean[j] - 1.0 / 3.0) < 0.02);
  }
  SUBCASE("empty sample is rejected") {
    PosteriorSample sample;
    CHECK_THROWS_AS(posterior_mean(sample), Error);
  }
}
