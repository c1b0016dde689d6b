#include <doctest.h>

#include <random>

#include "fixtures.hpp"
#include "relaybf/baselines.hpp"
#include "relaybf/joint_relay.hpp"

using namespace relaybf;
using relaybf::testing::Instance;
using relaybf::testing::make_instance;
using relaybf::testing::rel_err;
using relaybf::testing::small_config;

namespace {

CVector random_vector(Eigen::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  CVector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(g(rng), g(rng));
  return v;
}

PerStream<RelaySinrForms> forms_for_relay(const Instance& in, int r) {
  PerStream<RelaySinrForms> out(in.cfg.K);
  for (int k = 0; k < in.cfg.K; ++k)
    for (int l = 0; l < in.cfg.d; ++l) out[k].push_back(build_relay_forms(in.ch, in.bf, in.cfg, k, l, r));
  return out;
}

}  // namespace

TEST_CASE("relayed amplitude splits into the relay's share and the rest") {
  for (int s = 0; s < 10; ++s) {
    const auto in = make_instance(small_config(2, 2, 3, 2 + s % 3, 3), 200 + s);
    const int M = in.cfg.M;
    for (int k = 0; k < in.cfg.K; ++k) {
      for (int i = 0; i < in.cfg.K; ++i) {
        const CMatrix Hp = effective_channel(in.ch, in.bf.F, k, i);
        for (int r = 0; r < in.cfg.R; ++r) {
          const cplx direct = in.bf.vbar[k][0].tail(M).dot(Hp * in.bf.u[i][1]);
          const CVector c = relay_c(relay_a(in.ch, in.bf, k, 0, r), relay_b(in.ch, in.bf, r, i, 1));
          const cplx split = (vec(in.bf.F[r]).array() * c.array()).sum() + relay_residual(in.ch, in.bf, k, 0, r, i, 1);
          CHECK(std::abs(split - direct) <= 1e-12 * (1.0 + std::abs(direct)));
        }
      }
    }
  }
}

TEST_CASE("a single relay leaves no residual") {
  const auto in = make_instance(small_config(2, 1, 3, 3, 1), 5);
  CHECK(relay_residual(in.ch, in.bf, 1, 0, 0, 0, 0) == cplx(0.0));
}

TEST_CASE("signal forms are outer products") {
  const auto in = make_instance(small_config(2, 1, 4, 3, 2), 6);
  for (int i = 0; i < in.cfg.K; ++i) {
    const auto f = relay_signal_form(in.ch, in.bf, 0, 0, 1, i, 0);
    CHECK(min_eigenvalue(f.Q) >= -1e-12 * (1.0 + f.Q.norm()));
  }
}

TEST_CASE("homogenized forms reproduce the inhomogeneous value") {
  std::mt19937_64 rng(3);
  for (int s = 0; s < 20; ++s) {
    const auto in = make_instance(small_config(2, 1, 3, 2 + s % 3, 2), 300 + s);
    const auto rf = build_relay_forms(in.ch, in.bf, in.cfg, s % 2, 0, s % 2);
    const CVector f = random_vector(in.cfg.N * in.cfg.N, rng);
    CVector fbar(f.size() + 1);
    fbar << f, 1.0;
    for (const auto* pair : {&rf.numerator, &rf.denominator}) {
      const double direct = pair->evaluate(f);
      const double hom = fbar.dot(homogenize(*pair) * fbar).real();
      CHECK(std::abs(hom - direct) <= 1e-12 * (1.0 + std::abs(direct)));
    }
  }
}

TEST_CASE("filter-side SINR matches the channel-side approximation") {
  for (int s = 0; s < 50; ++s) {
    NetworkConfig cfg = small_config(1 + s % 3, 1 + s % 2, 2 + s % 4, 2 + s % 3, 1 + s % 3);
    const auto in = make_instance(cfg, 400 + s);
    const int k = s % cfg.K, l = s % cfg.d, r = s % cfg.R;
    const auto rf = build_relay_forms(in.ch, in.bf, cfg, k, l, r);
    const CVector fbar = stack_relay_filter(in.bf.F[r]);
    const double want = approx_sinr_u(in.ch, in.bf, cfg, k, l);
    CHECK(rel_err(approx_sinr_f(rf, fbar), want) <= 1e-10);
    CHECK(rel_err(approx_sinr_y(rf, fbar * fbar.adjoint()), want) <= 1e-10);
  }
}

TEST_CASE("approximation is exact without direct links and with one relay") {
  for (int s = 0; s < 10; ++s) {
    auto in = make_instance(small_config(2, 2, 3, 3, 1), 500 + s);
    for (auto& row : in.ch.J)
      for (auto& j : row) j.setZero();
    for (int k = 0; k < 2; ++k)
      for (int l = 0; l < 2; ++l)
        CHECK(rel_err(approx_sinr_u(in.ch, in.bf, in.cfg, k, l), stream_sinr(in.bf, in.ch, in.cfg, k, l)) <= 1e-9);
  }
}

TEST_CASE("without a relay path the approximation is the direct SINR") {
  auto in = make_instance(small_config(2, 1, 3, 3, 2), 7);
  for (auto& row : in.ch.H2)
    for (auto& h : row) h.setZero();
  CHECK(rel_err(approx_sinr_u(in.ch, in.bf, in.cfg, 0, 0), stream_sinr(in.bf, in.ch, in.cfg, 0, 0)) <= 1e-12);
}

TEST_CASE("a silent relay leaves only the constant blocks") {
  const auto in = make_instance(small_config(2, 1, 3, 3, 2), 8);
  const auto rf = build_relay_forms(in.ch, in.bf, in.cfg, 0, 0, 1);
  const CVector fbar = stack_relay_filter(CMatrix::Zero(3, 3));
  CHECK(rel_err(approx_sinr_f(rf, fbar), rf.numerator.constant / rf.denominator.constant) <= 1e-14);
}

TEST_CASE("relay power forms") {
  for (int s = 0; s < 10; ++s) {
    const auto in = make_instance(small_config(2, 2, 3, 2 + s % 3, 2), 600 + s);
    const auto p = build_power_forms(in.ch, in.bf, in.cfg, 0.0);
    for (int r = 0; r < in.cfg.R; ++r) {
      const CVector f = vec(in.bf.F[r]);
      double acc = 0.0;
      for (int k = 0; k < in.cfg.K; ++k) {
        for (int l = 0; l < in.cfg.d; ++l) {
          acc += f.dot(p.Dp[r][k][l] * f).real();
          CHECK(min_eigenvalue(p.D[r][k][l]) >= -1e-12 * (1.0 + p.D[r][k][l].norm()));
          const auto& Db = p.Dbar[r][k][l];
          const Eigen::Index n = Db.rows();
          CHECK(Db(n - 1, n - 1) == cplx(0.0));
          CHECK(Db.col(n - 1).norm() == 0.0);
          CHECK(Db.row(n - 1).norm() == 0.0);
        }
      }
      CHECK(rel_err(acc, relay_power(in.bf, in.ch, in.cfg, r)) <= 1e-10);
      const CVector fbar = stack_relay_filter(in.bf.F[r]);
      CHECK(rel_err(fbar.dot(p.Dbar_sum[r] * fbar).real(), acc) <= 1e-10);
    }
  }

  auto in = make_instance(small_config(2, 1, 3, 2, 1), 9);
  for (auto& row : in.bf.u)
    for (auto& u : row) u.setZero();
  const auto p = build_power_forms(in.ch, in.bf, in.cfg, 0.0);
  CHECK(p.Dp[0][1][0].isApprox((in.cfg.sigma_sq / 2.0) * CMatrix::Identity(4, 4)));
  CHECK_THROWS_AS(build_power_forms(in.ch, in.bf, in.cfg, -1.0), std::invalid_argument);
}

TEST_CASE("relay subproblem shape and homogenizing entry") {
  const auto in = make_instance(small_config(2, 1, 3, 3, 2), 10);
  const auto js = init_joint_state(in.ch, in.bf, in.cfg, in.targets);
  const auto power = build_power_forms(in.ch, in.bf, in.cfg, 0.0);
  const auto rf = forms_for_relay(in, 0);
  const auto p = build_y_subproblem(rf, power, in.targets, js, 0, in.cfg.p_relay_max());
  CHECK(p.num_blocks() == 1);
  CHECK(p.count_constraints(conic::Sense::Equal) == in.cfg.B() + 1);
  CHECK(p.count_constraints(conic::Sense::LessEqual) == 1);

  // the current filter is feasible, so the solve must succeed
  const auto sol = conic::solve(p);
  REQUIRE(sol.optimal());
  const auto& Y = sol.blocks[0];
  CHECK(Y.rows() == 10);
  CHECK(std::abs(Y(9, 9).real() - 1.0) <= 1e-8);
  CHECK(real_trace_product(Y, power.Dbar_sum[0]) <=
        real_trace_product(js.Y[0], power.Dbar_sum[0]) * (1.0 + 1e-6));
}

TEST_CASE("scalar relay subproblem matches a grid search") {
  const auto in = make_instance(small_config(1, 1, 1, 1, 1), 11);
  auto js = init_joint_state(in.ch, in.bf, in.cfg, in.targets);
  js.zeta_dot[0][0][0] *= 1.5;
  const auto power = build_power_forms(in.ch, in.bf, in.cfg, 0.0);
  const auto rf = forms_for_relay(in, 0);
  const auto sol = conic::solve(build_y_subproblem(rf, power, in.targets, js, 0, 1e6), 1e-9);
  REQUIRE(sol.optimal());
  const double got = real_trace_product(sol.blocks[0], power.Dbar_sum[0]);

  // The equality fixes |f|, so scan the circle of admissible values.
  const double want_signal = js.zeta_dot[0][0][0] * in.targets[0][0];
  const auto& num = rf[0][0].numerator;
  double best = std::numeric_limits<double>::infinity();
  const double lim = 4.0 * std::abs(in.bf.F[0](0, 0)) * std::sqrt(1.5) + 1.0;
  const int n = 1200;
  for (int a = 0; a <= n; ++a) {
    for (int b = 0; b <= n; ++b) {
      CVector f(1);
      f(0) = cplx(-lim + 2.0 * lim * a / n, -lim + 2.0 * lim * b / n);
      if (std::abs(num.evaluate(f) - want_signal) > 2e-2 * want_signal) continue;
      best = std::min(best, (f.adjoint() * power.Dp[0][0][0] * f)(0, 0).real());
    }
  }
  REQUIRE(std::isfinite(best));
  CHECK(rel_err(got, best) <= 5e-2);
}

TEST_CASE("relay filter extraction") {
  std::mt19937_64 rng(12);
  const int N = 3;
  const CMatrix F = unvec(random_vector(N * N, rng), N, N);
  const cplx t = std::polar(1.0, M_PI / 4.0);
  const CVector fbar = stack_relay_filter(F, t);
  auto r = extract_relay_filter(fbar * fbar.adjoint(), N);
  CHECK(r.rank_one);
  // the gauge is set by t, so the recovered filter is F / t
  CHECK((r.F * t - F).norm() <= 1e-10 * F.norm());

  const CVector g = stack_relay_filter(F);
  HermitianMatrix noisy = g * g.adjoint();
  noisy += 1e-7 * CMatrix::Identity(N * N + 1, N * N + 1);
  r = extract_relay_filter(noisy, N);
  CHECK((r.F - F).norm() <= 1e-4);

  bool rejected = false;
  try {
    rejected = !extract_relay_filter(CMatrix::Identity(N * N + 1, N * N + 1), N).rank_one;
  } catch (const std::invalid_argument&) {
    rejected = true;
  }
  CHECK(rejected);
  CHECK_THROWS_AS(extract_relay_filter(CMatrix::Identity(5, 5), N), std::invalid_argument);
}

TEST_CASE("joint run keeps the transmit accounting") {
  const auto in = make_instance(small_config(2, 1, 3, 2, 1), 13);
  AlgorithmControl ctrl;
  ctrl.seed = 13;
  ctrl.s_max = 40;
  const auto out = run_joint(in.cfg, in.ch, in.bf, in.targets, ctrl);
  CHECK_FALSE(out.aborted);
  CHECK(out.F.size() == 1);
  CHECK(out.F[0].rows() == 2);
  CHECK(out.message_count == out.iterations * message_load(Algorithm::Joint, in.cfg.B()));
  if (out.converged) {
    for (int k = 0; k < in.cfg.K; ++k) CHECK(std::abs(out.sinrs[k][0] - in.targets[k][0]) <= ctrl.delta_max);
  }
}

TEST_CASE("relay rounds never raise the power of the transmit-only solution") {
  for (std::uint64_t seed : {21u, 22u, 23u}) {
    CAPTURE(seed);
    const auto in = make_instance(small_config(2, 1, 3, 3, 2), seed);
    AlgorithmControl ctrl;
    ctrl.seed = seed;
    ctrl.s_max = 300;
    ctrl.incorporate_power_constraints = true;
    const auto tx = admm_run(in.cfg, in.ch, in.bf, in.targets, ctrl);
    if (!tx.converged) continue;
    const auto joint = run_joint(in.cfg, in.ch, in.bf, in.targets, ctrl);
    REQUIRE(joint.converged);
    CHECK(joint.iterations >= tx.iterations);
    // the first feasible iterate is the transmit-only one, and later ones are kept only if cheaper
    CHECK(joint.total_power <= tx.total_power * (1.0 + 1e-9));
    const auto forms = precompute_forms(in.ch, BeamformerSet{in.bf.u, joint.F, in.bf.vbar}, in.cfg);
    CHECK(max_sinr_deviation(all_stream_sinrs(forms, joint.X), in.targets) <= ctrl.delta_max);
  }
}
