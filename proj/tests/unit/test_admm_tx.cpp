#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "relaybf/baselines.hpp"

using namespace relaybf;
using relaybf::testing::make_instance;
using relaybf::testing::rel_err;
using relaybf::testing::small_config;

TEST_CASE("subproblem shape with and without budgets") {
  const auto in = make_instance(NetworkConfig{}, 1);
  AlgorithmControl ctrl;
  AdmmState st = init_admm_state(in.bf, ctrl);
  const PowerLimits lim = power_limits(in.cfg, in.bf.F);
  auto p = build_x_subproblem(in.forms, in.targets, st, 0, 1, ctrl, lim);
  CHECK(p.num_blocks() == 1);
  CHECK(p.count_constraints(conic::Sense::Equal) == 1);
  CHECK(p.count_constraints(conic::Sense::LessEqual) == 0);
  ctrl.incorporate_power_constraints = true;
  p = build_x_subproblem(in.forms, in.targets, st, 0, 1, ctrl, lim);
  CHECK(p.count_constraints(conic::Sense::Equal) == 1);
  CHECK(p.count_constraints(conic::Sense::LessEqual) == 1 + in.cfg.R);

  st.zeta[0][1] = -10.0 * in.forms.sigma_n[0][1];
  CHECK_THROWS_AS(build_x_subproblem(in.forms, in.targets, st, 0, 1, ctrl, lim), InfeasibleSubproblem);
}

TEST_CASE("scalar subproblem has the closed-form solution") {
  const auto in = make_instance(small_config(1, 1, 1, 1, 1), 4);
  AlgorithmControl ctrl;
  AdmmState st = init_admm_state(in.bf, ctrl);
  auto sol = conic::solve(build_x_subproblem(in.forms, in.targets, st, 0, 0, ctrl, {}), 1e-10);
  REQUIRE(sol.optimal());
  const double expect = in.targets[0][0] * (st.zeta[0][0] + in.forms.sigma_n[0][0]) /
                        in.forms.Rkl[0][0][0](0, 0).real();
  CHECK(rel_err(sol.blocks[0](0, 0).real(), expect) <= 1e-8);
}

TEST_CASE("auxiliary updates") {
  auto [z, zb] = update_aux(1.2, 0.0, 0.0, 0.0, 1.2);
  CHECK(z == doctest::Approx(-1.0));
  (void)zb;

  std::tie(z, zb) = update_aux(0.0, 0.0, 0.0, 0.37, 1.2);
  CHECK(z == doctest::Approx(-0.37));
  CHECK(zb == doctest::Approx(0.37));

  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int t = 0; t < 100; ++t) {
    const double lam = u(rng), mu = u(rng), mub = u(rng), zb_old = u(rng), rho = 0.1 + std::abs(u(rng));
    std::tie(z, zb) = update_aux(lam, mu, mub, zb_old, rho);
    CHECK(std::abs(lam + mu + rho * (z + zb_old)) <= 1e-12);
    CHECK(std::abs(lam + mub + rho * (z + zb)) <= 1e-12);
  }
}

TEST_CASE("dual updates follow the residuals") {
  AdmmState st;
  st.zeta = {{0.4}};
  st.zeta_b = {{-0.4}};
  st.lambda = {{0.3}};
  st.mu = {{0.2}};
  st.mu_b = {{0.1}};
  st.rho = 1.2;
  st.rho_c = 0.5;
  const double gamma = 2.0, sigma = 1.5;
  // signal trace chosen so that zeta meets the SINR identity exactly
  const double sig = gamma * (0.4 + sigma);
  auto du = update_duals(st, sig, gamma, sigma, 0.7, 0, 0);
  CHECK(du.lambda == 0.3);
  CHECK(du.mu == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(du.mu_b == doctest::Approx(0.1 + 0.5 * (-0.4 + 0.7)).epsilon(1e-14));

  st.zeta_b = {{0.25}};
  du = update_duals(st, 1.0, gamma, sigma, 0.3, 0, 0);
  CHECK(std::abs(du.lambda - (0.3 + 1.2 * 0.65)) <= 1e-14);
  CHECK(std::abs(du.mu - (0.2 + 0.5 * (0.4 - 0.5 + 1.5))) <= 1e-14);
  CHECK(std::abs(du.mu_b - (0.1 + 0.5 * (0.25 + 0.3))) <= 1e-14);
}

TEST_CASE("proposed ADMM converges on a feasible instance") {
  const auto in = make_instance(NetworkConfig{}, 2);
  AlgorithmControl ctrl;
  ctrl.seed = 2;
  const RunOutcome out = admm_run(in.cfg, in.ch, in.bf, in.targets, ctrl);
  REQUIRE(out.converged);
  CHECK_FALSE(out.aborted);
  CHECK(out.iterations == static_cast<int>(out.total_power_history.size()));
  CHECK(out.message_count == out.iterations * message_load(Algorithm::Proposed, in.cfg.B()));
  for (int k = 0; k < in.cfg.K; ++k) {
    for (int l = 0; l < in.cfg.d; ++l) {
      CHECK(std::abs(out.sinrs[k][l] - in.targets[k][l]) <= ctrl.delta_max);
      CHECK(min_eigenvalue(out.X[k][l]) >= -1e-8);
    }
  }
  // the subproblem optimum is rank one by construction
  for (const auto& row : out.X)
    for (const auto& x : row) CHECK(rank_one_extract(x).rank_one);
}

TEST_CASE("scaled-up targets raise the infeasibility flag") {
  auto in = make_instance(NetworkConfig{}, 2);
  for (auto& row : in.targets)
    for (auto& g : row) g *= 100.0;
  AlgorithmControl ctrl;
  ctrl.seed = 2;
  const RunOutcome out = admm_run(in.cfg, in.ch, in.bf, in.targets, ctrl);
  CHECK(out.iflag);
}

TEST_CASE("power-constrained mode runs to completion") {
  const auto in = make_instance(NetworkConfig{}, 6);
  AlgorithmControl ctrl;
  ctrl.seed = 6;
  ctrl.incorporate_power_constraints = true;
  const RunOutcome out = admm_run(in.cfg, in.ch, in.bf, in.targets, ctrl);
  CHECK_FALSE(out.aborted);
  CHECK(out.iterations >= 1);
}

TEST_CASE("rank-one extraction") {
  CVector w(2);
  w << 1.0, cplx(0.0, 1.0);
  auto r = rank_one_extract(w * w.adjoint());
  CHECK(r.rank_one);
  CHECK(r.ratio <= 1e-14);
  // equal up to a unit phase
  const cplx phase = w.dot(r.u) / w.squaredNorm();
  CHECK(std::abs(std::abs(phase) - 1.0) <= 1e-12);
  CHECK((r.u - phase * w).norm() <= 1e-12);

  r = rank_one_extract(CMatrix::Identity(2, 2));
  CHECK_FALSE(r.rank_one);
  CHECK(r.ratio == doctest::Approx(1.0));

  r = rank_one_extract(w * w.adjoint() + 1e-9 * CMatrix::Identity(2, 2));
  CHECK(r.ratio == doctest::Approx(1e-9 / (2.0 + 1e-9)).epsilon(1e-5));
}

TEST_CASE("control validation") {
  AlgorithmControl c;
  c.delta_max = 0.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
  c = AlgorithmControl{};
  c.rho = -1.0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
