#include <doctest.h>

#include "flockyap/ensemble.hpp"
#include "oracles.hpp"

using namespace flockyap;

namespace {

AgentMatrix consensus_state(int n, int d, double value) {
  return AgentMatrix::Constant(n, d, value);
}

}  // namespace

TEST_CASE("variance form vanishes on the consensus manifold") {
  const AgentMatrix x = consensus_state(5, 3, 2.5);
  CHECK(variance_form(x, x) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("variance form on the two-agent antipodal pair") {
  AgentMatrix x(2, 1);
  x << 1.0, -1.0;
  CHECK(variance_form(x, x) == doctest::Approx(1.0));
}

TEST_CASE("variance form equals the all-pairs sum") {
  oracles::TestRng rng(7);
  const AgentMatrix x = rng.matrix(5, 3);
  const AgentMatrix y = rng.matrix(5, 3);
  const double got = variance_form(x, y);
  const double want = oracles::pairwise_variance_form(x, y);
  CHECK(std::abs(got - want) <= 1e-12 * std::max(1.0, std::abs(want)));
}

TEST_CASE("variance form rejects mismatched shapes") {
  oracles::TestRng rng(8);
  CHECK_THROWS_AS(variance_form(rng.matrix(4, 2), rng.matrix(5, 2)), std::invalid_argument);
  CHECK_THROWS_AS(variance_form(rng.matrix(4, 2), rng.matrix(4, 3)), std::invalid_argument);
}

TEST_CASE("variance form is bilinear and symmetric") {
  oracles::TestRng rng(21);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = 3 + rng.uniform_int(6), d = 1 + rng.uniform_int(3);
    const AgentMatrix x = rng.matrix(n, d), y = rng.matrix(n, d), z = rng.matrix(n, d);
    const double a = rng.uniform(-2.0, 2.0), b = rng.uniform(-2.0, 2.0);
    CHECK(variance_form(x, y) == doctest::Approx(variance_form(y, x)).epsilon(1e-12));
    const double lin = variance_form(a * x + b * y, z);
    const double split = a * variance_form(x, z) + b * variance_form(y, z);
    CHECK(std::abs(lin - split) <= 1e-12 * std::max(1.0, std::abs(split)));
  }
}

TEST_CASE("variance form characterizes consensus") {
  oracles::TestRng rng(5);
  AgentMatrix x = consensus_state(6, 2, -0.75);
  CHECK(variance_form(x, x) < 1e-24);  // B = 0 at consensus
  x(3, 1) += 1e-6;                     // any deviation shows up
  CHECK(variance_form(x, x) > 0.0);
  const AgentMatrix y = rng.matrix(6, 2);
  const Eigen::RowVectorXd ym = mean(y);
  const double max_dev = (y.rowwise() - ym).rowwise().norm().maxCoeff();
  CHECK((variance_form(y, y) < 1e-24) == (max_dev < 1e-12));
}

TEST_CASE("Cauchy-Schwarz for the variance form") {
  oracles::TestRng rng(31);
  for (int rep = 0; rep < 50; ++rep) {
    const int n = 2 + rng.uniform_int(8), d = 1 + rng.uniform_int(3);
    const AgentMatrix x = rng.matrix(n, d), y = rng.matrix(n, d);
    const double bxy = variance_form(x, y);
    CHECK(bxy * bxy <= variance_form(x, x) * variance_form(y, y) + 1e-12);
  }
}

TEST_CASE("mean of identical agents and of a centered pair") {
  CHECK(mean(consensus_state(4, 2, 3.25)).isApprox(Eigen::RowVector2d(3.25, 3.25)));
  AgentMatrix x(2, 1);
  x << 2.0, 4.0;
  CHECK(mean(x)(0) == doctest::Approx(3.0));
  x << 1.5, -1.5;
  CHECK(std::abs(mean(x)(0)) < 1e-14);
}

TEST_CASE("center is idempotent and preserves the variance form") {
  oracles::TestRng rng(11);
  EnsembleState s;
  s.n_agents = 6;
  s.dim = 3;
  s.positions = rng.matrix(6, 3, -4.0, 4.0);
  s.velocities = rng.matrix(6, 3);
  const double bxx = variance_form(s.positions, s.positions);
  const double bvv = variance_form(*s.velocities, *s.velocities);
  const EnsembleState c = center(s);
  CHECK(mean(c.positions).norm() < 1e-14);
  CHECK(mean(*c.velocities).norm() < 1e-14);
  CHECK(variance_form(c.positions, c.positions) == doctest::Approx(bxx).epsilon(1e-14));
  CHECK(variance_form(*c.velocities, *c.velocities) == doctest::Approx(bvv).epsilon(1e-14));
  const EnsembleState cc = center(c);
  CHECK((cc.positions - c.positions).cwiseAbs().maxCoeff() < 1e-15);

  AgentMatrix two(2, 1);
  two << 2.0, 4.0;
  EnsembleState pair{2, 1, two, std::nullopt, 0.0};
  const EnsembleState cp = center(pair);
  CHECK(cp.positions(0, 0) == doctest::Approx(-1.0));
  CHECK(cp.positions(1, 0) == doctest::Approx(1.0));
}

TEST_CASE("std_devs on consensus, antipodal pair and aligned velocities") {
  EnsembleState s;
  s.n_agents = 4;
  s.dim = 2;
  s.positions = consensus_state(4, 2, 1.0);
  s.velocities = consensus_state(4, 2, -2.0);
  const VarianceStats st = std_devs(s);
  CHECK(st.X == doctest::Approx(0.0).epsilon(1e-15));
  REQUIRE(st.V.has_value());
  CHECK(*st.V == doctest::Approx(0.0).epsilon(1e-15));

  EnsembleState pair;
  pair.n_agents = 2;
  pair.dim = 1;
  pair.positions = AgentMatrix(2, 1);
  pair.positions << 1.0, -1.0;
  CHECK(std_devs(pair).X == doctest::Approx(1.0));
  CHECK(!std_devs(pair).V.has_value());
}

TEST_CASE("state validation flags malformed input") {
  EnsembleState s;
  s.n_agents = 3;
  s.dim = 2;
  s.positions = AgentMatrix::Zero(3, 2);
  CHECK_NOTHROW(s.validate());
  s.positions(1, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s.positions(1, 0) = 0.0;
  s.velocities = AgentMatrix::Zero(2, 2);  // wrong row count
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
