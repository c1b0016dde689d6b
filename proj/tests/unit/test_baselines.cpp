#include <doctest.h>

#include "fixtures.hpp"
#include "relaybf/baselines.hpp"

using namespace relaybf;
using relaybf::testing::make_instance;
using relaybf::testing::rel_err;
using relaybf::testing::small_config;

TEST_CASE("algorithm names round-trip") {
  for (Algorithm a : {Algorithm::Proposed, Algorithm::AdmmBg, Algorithm::Adal, Algorithm::Centralized,
                      Algorithm::Joint}) {
    CHECK(parse_algorithm(to_string(a)) == a);
  }
  CHECK_THROWS_AS(parse_algorithm("sdp"), std::invalid_argument);
}

TEST_CASE("centralized scalar case") {
  const auto in = make_instance(small_config(1, 1, 1, 1, 1), 8);
  const auto c = centralized_solve(in.forms, in.targets, in.cfg, in.bf.F);
  REQUIRE(c.optimal());
  const double expect = in.targets[0][0] * in.forms.sigma_n[0][0] / in.forms.Rkl[0][0][0](0, 0).real();
  CHECK(rel_err(c.X[0][0](0, 0).real(), expect) <= 1e-7);
}

TEST_CASE("centralized optimum makes every SINR constraint active") {
  const auto in = make_instance(NetworkConfig{}, 21);
  const auto c = centralized_solve(in.forms, in.targets, in.cfg, in.bf.F);
  REQUIRE(c.optimal());
  const auto s = all_stream_sinrs(in.forms, c.X);
  for (int k = 0; k < in.cfg.K; ++k)
    for (int l = 0; l < in.cfg.d; ++l) CHECK(rel_err(s[k][l], in.targets[k][l]) <= 1e-6);
  CHECK(c.total_power > c.objective);
}

TEST_CASE("centralized power vanishes with the targets") {
  auto in = make_instance(small_config(2, 1, 3, 3, 1), 3);
  for (auto& row : in.targets)
    for (auto& g : row) g = 1e-6;
  const auto c = centralized_solve(in.forms, in.targets, in.cfg, in.bf.F);
  REQUIRE(c.optimal());
  CHECK(c.objective < 1e-3);
}

TEST_CASE("centralized infeasibility propagates under budgets") {
  auto in = make_instance(small_config(2, 1, 3, 3, 1), 3);
  for (auto& row : in.targets)
    for (auto& g : row) g *= 1e4;
  const auto c = centralized_solve(in.forms, in.targets, in.cfg, in.bf.F, true);
  CHECK(c.status == conic::Status::Infeasible);
}

TEST_CASE("ADMM-BG slack stays nonnegative") {
  CHECK(bg_slack_update(1.0, 0.6, 1.2) == doctest::Approx(0.5));
  CHECK(bg_slack_update(0.1, 5.0, 1.2) == 0.0);
}

TEST_CASE("ADMM-BG agrees with the proposed fixed point") {
  const auto in = make_instance(NetworkConfig{}, 2);
  AlgorithmControl ctrl;
  ctrl.seed = 2;
  const auto a = admm_run(in.cfg, in.ch, in.bf, in.targets, ctrl);
  const auto g = admm_bg_run(in.cfg, in.ch, in.bf, in.targets, ctrl);
  REQUIRE(a.converged);
  REQUIRE(g.converged);
  CHECK(rel_err(g.total_power, a.total_power) <= 1e-3);
  CHECK(g.message_count == g.iterations * message_load(Algorithm::AdmmBg, in.cfg.B()));
}

TEST_CASE("ADAL subproblem carries B equalities") {
  const auto in = make_instance(NetworkConfig{}, 2);
  AdalState st;
  const int B = in.cfg.B();
  st.X = outer_products(in.bf.u);
  st.lambda = RVector::Zero(B);
  st.zeta_arrow.assign(in.cfg.K, std::vector<RVector>(in.cfg.d, RVector::Zero(B)));
  st.zeta_vec = st.zeta_arrow;
  const auto p = build_adal_subproblem(in.forms, in.targets, st, 1, 0);
  CHECK(p.count_constraints(conic::Sense::Equal) == B);
  CHECK(p.num_scalars() == B);
}

TEST_CASE("ADAL relaxation") {
  RVector a(3), z(3);
  a << 1, 2, 3;
  z << 4, 5, 6;
  CHECK(adal_relax(a, z, 1.0) == z);
  CHECK(adal_relax(a, z, 0.5).isApprox(RVector::Constant(3, 1.5) + a));
}

TEST_CASE("ADAL reaches the targets on a small instance") {
  const auto in = make_instance(small_config(2, 1, 3, 3, 1), 4);
  AlgorithmControl ctrl = adal_defaults();
  ctrl.seed = 4;
  const auto out = adal_run(in.cfg, in.ch, in.bf, in.targets, ctrl);
  CHECK_FALSE(out.aborted);
  CHECK(out.message_count == out.iterations * message_load(Algorithm::Adal, in.cfg.B()));
  if (out.converged) {
    for (int k = 0; k < in.cfg.K; ++k) CHECK(std::abs(out.sinrs[k][0] - in.targets[k][0]) <= ctrl.delta_max);
  }
}

TEST_CASE("accounting formulas") {
  CHECK(complexity_units(Algorithm::Proposed, 10, 10, 6, 3) == 90);
  CHECK(complexity_units(Algorithm::Joint, 10, 10, 6, 3) == 540);
  CHECK(3 * complexity_units_per_processor(Algorithm::Joint, 10, 10, 6) == 450);
  CHECK(complexity_units_per_processor(Algorithm::AdmmBg, 10, 10, 6) == 28);
  CHECK(complexity_units_per_processor(Algorithm::Adal, 10, 10, 6) == 6 * 16 + 12);
  CHECK_THROWS_AS(complexity_units_per_processor(Algorithm::Centralized, 10, 10, 6), std::invalid_argument);
  CHECK(message_load(Algorithm::Proposed, 6) == 36);
  CHECK(message_load(Algorithm::AdmmBg, 6) == 36);
  CHECK(message_load(Algorithm::Adal, 6) == 72);
  CHECK(message_load(Algorithm::Proposed, 1) == 1);
  CHECK(message_load(Algorithm::Adal, 1) == 2);
  CHECK_THROWS_AS(message_load(Algorithm::Adal, 0), std::invalid_argument);
}
