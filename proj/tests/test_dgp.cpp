#include "doctest.h"

#include <cmath>

#include "svpl/dgp.hpp"
#include "svpl/stats.hpp"

using namespace svpl;

TEST_CASE("conditional mean matches hand-computed values") {
  Eigen::RowVectorXd x0(4);
  x0 << 0, 0, 0, 0;
  // baseline -1, low region adds 5*exp(0) for arms 1-2
  CHECK(dgp::conditional_mean(x0, 0) == doctest::Approx(4.0));
  CHECK(dgp::conditional_mean(x0, 1) == doctest::Approx(4.0));
  CHECK(dgp::conditional_mean(x0, 4) == doctest::Approx(-1.0));

  Eigen::RowVectorXd x1(4);
  x1 << 1, 0, 0, 0;
  // x1 + x2 = 1 activates the {3,4} interaction: 2 - 1 + 5*(0+1)^2 = 6
  CHECK(dgp::conditional_mean(x1, 2) == doctest::Approx(6.0));
  CHECK(dgp::conditional_mean(x1, 3) == doctest::Approx(6.0));
  CHECK(dgp::conditional_mean(x1, 0) == doctest::Approx(1.0));

  Eigen::RowVectorXd too_short(1);
  too_short << 0.5;
  CHECK_THROWS_AS(dgp::conditional_mean(too_short, 0), Error);
}

TEST_CASE("behavioral policy at the boundary") {
  Eigen::RowVectorXd x(4);
  x << 0.25, 0.25, 0, 0;  // x1 + x2 = 0.5, sigmoid at zero
  dgp::SyntheticConfig cfg;
  Eigen::VectorXd probs = dgp::behavioral_policy(x, cfg.beta_low, cfg.beta_high);

  // raw mixture is the componentwise mean of the two preference states
  Eigen::VectorXd raw = 0.5 * cfg.beta_low + 0.5 * cfg.beta_high;
  CHECK(raw[0] == doctest::Approx(6.0));
  CHECK(raw[1] == doctest::Approx(5.5));
  CHECK(raw[2] == doctest::Approx(5.5));
  CHECK(raw[3] == doctest::Approx(6.5));
  CHECK(raw[4] == doctest::Approx(3.0));

  CHECK(probs.sum() == doctest::Approx(1.0));
  for (int a = 0; a < 5; ++a) {
    CHECK(probs[a] == doctest::Approx(raw[a] / raw.sum()));
    CHECK(probs[a] > 0.0);
  }
}

TEST_CASE("behavioral policy is a strictly positive simplex point everywhere") {
  Rng rng(3);
  for (int trial = 0; trial < 500; ++trial) {
    Eigen::RowVectorXd x(4);
    for (int j = 0; j < 4; ++j) x[j] = 3.0 * rng.next_gaussian();
    Eigen::VectorXd probs = dgp::behavioral_policy(x);
    CHECK(probs.sum() == doctest::Approx(1.0));
    CHECK(probs.minCoeff() > 0.0);
  }
}

TEST_CASE("generate is deterministic under a fixed seed") {
  dgp::SyntheticConfig cfg;
  cfg.n = 200;
  cfg.seed = 12345;
  Dataset d1 = dgp::generate(cfg);
  Dataset d2 = dgp::generate(cfg);
  CHECK(d1.X() == d2.X());
  CHECK(d1.A() == d2.A());
  CHECK(d1.Y() == d2.Y());
  CHECK(*d1.oracle().potential_outcomes == *d2.oracle().potential_outcomes);
}

TEST_CASE("generate satisfies consistency and keeps the oracle coherent") {
  dgp::SyntheticConfig cfg;
  cfg.n = 500;
  cfg.seed = 9;
  Dataset ds = dgp::generate(cfg);
  const auto& po = *ds.oracle().potential_outcomes;
  for (int i = 0; i < ds.rows(); ++i) {
    CHECK(ds.Y()[i] == po(i, ds.A()[static_cast<std::size_t>(i)]));
    for (Arm a = 0; a < 5; ++a) {
      CHECK(ds.oracle().mu(i, a) == doctest::Approx(dgp::conditional_mean(ds.x(i), a)));
    }
  }
}

TEST_CASE("optimal sets are an arm pair determined by the region") {
  dgp::SyntheticConfig cfg;
  cfg.n = 6000;
  cfg.seed = 21;
  Dataset ds = dgp::generate(cfg);
  const TreatmentSet low({0, 1}, 5);
  const TreatmentSet high({2, 3}, 5);
  int n_low = 0;
  for (int i = 0; i < ds.rows(); ++i) {
    const auto& opt = ds.oracle().optimal_sets[static_cast<std::size_t>(i)];
    bool is_low = ds.X()(i, 0) + ds.X()(i, 1) < 0.5;
    if (is_low) {
      ++n_low;
      CHECK(opt == low);
    } else {
      CHECK(opt == high);
    }
  }
  // P(X1 + X2 < 0.5) = Phi(0.5 / sqrt(2)) ~ 0.638
  double frac = static_cast<double>(n_low) / ds.rows();
  CHECK(frac == doctest::Approx(stats::normal_cdf(0.5 / std::sqrt(2.0))).epsilon(0.04));
  CHECK(std::abs(frac - 0.638) < 0.02);
}

TEST_CASE("conditional mean ranks the active arm pair strictly first") {
  for (int gi = 0; gi < 100; ++gi) {
    for (int gj = 0; gj < 100; ++gj) {
      Eigen::RowVectorXd x(4);
      x << -3.0 + 6.0 * gi / 99.0, -3.0 + 6.0 * gj / 99.0, 0.0, 0.0;
      Eigen::VectorXd mu(5);
      for (Arm a = 0; a < 5; ++a) mu[a] = dgp::conditional_mean(x, a);
      if (x[0] + x[1] < 0.5) {
        // 5 exp(x1) > 0 always
        REQUIRE(mu[0] > mu[2]);
        REQUIRE(mu[0] > mu[4]);
        REQUIRE(mu[0] == mu[1]);
        REQUIRE(mu[2] == mu[3]);
        REQUIRE(mu[2] == mu[4]);
      } else if (5.0 * (x[1] + 1.0) * (x[1] + 1.0) > 1e-9) {
        REQUIRE(mu[2] > mu[0]);
        REQUIRE(mu[2] > mu[4]);
        REQUIRE(mu[2] == mu[3]);
        REQUIRE(mu[0] == mu[4]);
      }
    }
  }
}

TEST_CASE("overlap holds on generated data") {
  dgp::SyntheticConfig cfg;
  cfg.n = 2000;
  cfg.seed = 4;
  Dataset ds = dgp::generate(cfg);
  double min_prob = 1.0;
  for (int i = 0; i < ds.rows(); ++i) {
    min_prob = std::min(min_prob, dgp::behavioral_policy(ds.x(i)).minCoeff());
  }
  CHECK(min_prob > 0.0);
}

TEST_CASE("potential outcome noise is centered") {
  dgp::SyntheticConfig cfg;
  cfg.n = 100000;
  cfg.seed = 31;
  Dataset ds = dgp::generate(cfg);
  const auto& po = *ds.oracle().potential_outcomes;
  const auto& mu = ds.oracle().mu;
  const double bound = 3.0 * cfg.noise_sd / std::sqrt(static_cast<double>(cfg.n));
  for (Arm a = 0; a < 5; ++a) {
    double mean_diff = (po.col(a) - mu.col(a)).mean();
    CHECK(std::abs(mean_diff) < bound);
  }
}

TEST_CASE("secondary outcome rises with the arm index") {
  dgp::SyntheticConfig cfg;
  cfg.n = 300;
  cfg.seed = 8;
  cfg.secondary_outcome = true;
  Dataset ds = dgp::generate(cfg);
  REQUIRE(ds.oracle().secondary_mu.has_value());
  REQUIRE(ds.oracle().secondary_outcomes.has_value());
  const auto& xi_mu = *ds.oracle().secondary_mu;
  for (int i = 0; i < ds.rows(); ++i) {
    for (Arm a = 0; a + 1 < 5; ++a) {
      CHECK(xi_mu(i, a + 1) - xi_mu(i, a) == doctest::Approx(1.0));
    }
    CHECK(xi_mu(i, 0) == doctest::Approx(1.0 + 0.2 * ds.X()(i, 0)));
  }

  // toggling the secondary outcome must not move the primary draw
  dgp::SyntheticConfig plain = cfg;
  plain.secondary_outcome = false;
  Dataset base = dgp::generate(plain);
  CHECK(base.X() == ds.X());
  CHECK(base.A() == ds.A());
  CHECK(base.Y() == ds.Y());
}
