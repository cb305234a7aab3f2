#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cfmimo/socp.hpp"

using namespace cfmimo;
using namespace cfmimo::socp;

namespace {

// ||z - c|| <= r as a soft cone over all variables.
Cone ball(int n, const VecD& center, double radius) {
  Cone cone;
  for (int i = 0; i < n; ++i) cone.cols.push_back(i);
  cone.A = MatD::Identity(n, n);
  cone.u0 = -center;
  cone.b = VecD::Zero(n);
  cone.beta = radius;
  return cone;
}

}  // namespace

TEST_CASE("minimize_slack: two overlapping balls are feasible") {
  Problem prob;
  prob.n = 2;
  VecD c1(2), c2(2);
  c1 << 0.0, 0.0;
  c2 << 1.5, 0.0;
  prob.cones.push_back(ball(2, c1, 1.0));
  prob.cones.push_back(ball(2, c2, 1.0));
  Solution sol = minimize_slack(prob, VecD::Constant(2, 5.0));
  CHECK((sol.status == SolveStatus::SlackNegative || sol.slack <= 1e-7));
  // witness inside both balls (up to the slack)
  CHECK((sol.z - c1).norm() <= 1.0 + 1e-6);
  CHECK((sol.z - c2).norm() <= 1.0 + 1e-6);
}

TEST_CASE("minimize_slack: disjoint balls certify infeasibility") {
  Problem prob;
  prob.n = 2;
  VecD c1(2), c2(2);
  c1 << 0.0, 0.0;
  c2 << 4.0, 0.0;
  prob.cones.push_back(ball(2, c1, 1.0));
  prob.cones.push_back(ball(2, c2, 1.0));
  Solution sol = minimize_slack(prob, VecD::Zero(2));
  CHECK(sol.status == SolveStatus::LowerBoundPositive);
  CHECK(sol.slack_lower > 1e-7);

  // with the early exit disabled the optimal slack (gap/2 = 1) is reached
  SolveOptions full;
  full.infeasible_exit = kInf;
  Solution polished = minimize_slack(prob, VecD::Zero(2), full);
  CHECK(polished.slack == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("minimize_slack: halfspace plus orthant with known optimum") {
  // minimize s subject to x1 + x2 - 3 + s >= 0 (1-dim cone), x >= 0.
  // At x in the orthant the best slack approaches -inf... bounded by a ball.
  Problem prob;
  prob.n = 2;
  Cone half;
  half.cols = {0, 1};
  half.A = MatD::Zero(1, 2);  // zero norm part: pure halfspace
  half.u0 = VecD::Zero(1);
  half.b = VecD::Ones(2);
  half.beta = -3.0;
  prob.cones.push_back(half);
  Cone bound = ball(2, VecD::Zero(2), 2.0);
  bound.slack_coeff = 0.0;  // hard
  prob.cones.push_back(bound);
  prob.nonneg = {0, 1};
  SolveOptions full;
  full.infeasible_exit = kInf;  // run to the optimum, no early verdict
  Solution sol = minimize_slack(prob, VecD::Constant(2, 0.5), full);
  // best x on the hard ball: x1 = x2 = sqrt(2): s* = 3 - 2 sqrt(2)
  CHECK(sol.status != SolveStatus::Stalled);
  CHECK(sol.slack == doctest::Approx(3.0 - 2.0 * std::sqrt(2.0)).epsilon(1e-3));
}

TEST_CASE("minimize_slack: rejects a start violating hard constraints") {
  Problem prob;
  prob.n = 1;
  Cone bound = ball(1, VecD::Zero(1), 1.0);
  bound.slack_coeff = 0.0;
  prob.cones.push_back(bound);
  CHECK_THROWS(minimize_slack(prob, VecD::Constant(1, 5.0)));

  Problem orth;
  orth.n = 1;
  orth.nonneg = {0};
  CHECK_THROWS(minimize_slack(orth, VecD::Constant(1, -1.0)));
}

TEST_CASE("minimize_slack: scaled cone data stays well conditioned") {
  // same geometry as the overlapping balls but scaled by 1e-6
  for (double scale : {1e-6, 1.0, 1e6}) {
    Problem prob;
    prob.n = 2;
    VecD c1(2), c2(2);
    c1 << 0.0, 0.0;
    c2 << 1.5 * scale, 0.0;
    prob.cones.push_back(ball(2, c1, scale));
    prob.cones.push_back(ball(2, c2, scale));
    Solution sol = minimize_slack(prob, VecD::Constant(2, 0.1 * scale));
    CHECK((sol.status == SolveStatus::SlackNegative || sol.slack <= 1e-7 * scale));
  }
}
