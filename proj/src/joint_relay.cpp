#include "relaybf/joint_relay.hpp"

#include <limits>
#include <optional>
#include <stdexcept>

namespace relaybf {

double InhomogeneousForm::evaluate(const CVector& f) const {
  return f.dot(Q * f).real() + 2.0 * f.dot(lin).real() + constant;
}

InhomogeneousForm& InhomogeneousForm::operator+=(const InhomogeneousForm& o) {
  Q += o.Q;
  lin += o.lin;
  constant += o.constant;
  return *this;
}

HermitianMatrix homogenize(const InhomogeneousForm& form) {
  const Eigen::Index n = form.Q.rows();
  HermitianMatrix h(n + 1, n + 1);
  h.topLeftCorner(n, n) = form.Q;
  h.topRightCorner(n, 1) = form.lin;
  h.bottomLeftCorner(1, n) = form.lin.adjoint();
  h(n, n) = form.constant;
  return h;
}

CVector relay_a(const ChannelSet& ch, const BeamformerSet& bf, int k, int l, int r) {
  const Eigen::Index M = ch.G[k][r].rows();
  return ch.G[k][r].adjoint() * bf.vbar[k][l].tail(M);
}

CVector relay_b(const ChannelSet& ch, const BeamformerSet& bf, int r, int i, int n) {
  return ch.H2[r][i] * bf.u[i][n];
}

CVector relay_c(const CVector& a, const CVector& b) { return kron(b, a.conjugate()); }

cplx relay_residual(const ChannelSet& ch, const BeamformerSet& bf, int k, int l, int r, int i, int n) {
  cplx s = 0.0;
  for (int q = 0; q < ch.R(); ++q) {
    if (q == r) continue;
    s += relay_a(ch, bf, k, l, q).dot(bf.F[q] * relay_b(ch, bf, q, i, n));
  }
  return s;
}

InhomogeneousForm relay_signal_form(const ChannelSet& ch, const BeamformerSet& bf, int k, int l, int r, int i,
                                    int n) {
  const CVector c = relay_c(relay_a(ch, bf, k, l, r), relay_b(ch, bf, r, i, n));
  const cplx res = relay_residual(ch, bf, k, l, r, i, n);
  const Eigen::Index M = ch.J[k][i].rows();
  const cplx direct = bf.vbar[k][l].head(M).dot(ch.J[k][i] * bf.u[i][n]);
  InhomogeneousForm f;
  f.Q = c.conjugate() * c.transpose();
  f.lin = res * c.conjugate();
  f.constant = std::norm(res) + std::norm(direct);
  return f;
}

InhomogeneousForm relay_noise_form(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k,
                                   int l, int r) {
  const Eigen::Index M = ch.G[k][r].rows();
  const Eigen::Index N = ch.G[k][r].cols();
  const CVector a = relay_a(ch, bf, k, l, r);
  // Relay noises are independent, so the other relays only add a constant.
  double others = 0.0;
  for (int q = 0; q < ch.R(); ++q) {
    if (q != r) others += (bf.F[q].adjoint() * relay_a(ch, bf, k, l, q)).squaredNorm();
  }
  InhomogeneousForm f;
  f.Q = cfg.sigma_sq * kron(CMatrix::Identity(N, N), a * a.adjoint());
  f.lin = CVector::Zero(N * N);
  f.constant = cfg.sigma_sq * (others + bf.vbar[k][l].tail(M).squaredNorm());
  return f;
}

RelaySinrForms build_relay_forms(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k,
                                 int l, int r) {
  const Eigen::Index M = ch.J[k][k].rows();
  RelaySinrForms out;
  out.numerator = relay_signal_form(ch, bf, k, l, r, k, l);
  out.denominator = relay_noise_form(ch, bf, cfg, k, l, r);
  out.denominator.constant += cfg.sigma_sq * bf.vbar[k][l].head(M).squaredNorm();
  for (int j = 0; j < ch.K(); ++j) {
    for (size_t m = 0; m < bf.u[j].size(); ++m) {
      if (j == k && static_cast<int>(m) == l) continue;
      out.denominator += relay_signal_form(ch, bf, k, l, r, j, static_cast<int>(m));
    }
  }
  out.num_tilde = homogenize(out.numerator);
  out.den_tilde = homogenize(out.denominator);
  return out;
}

double approx_sinr_u(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k, int l) {
  const CVector& v = bf.vbar[k][l];
  const Eigen::Index M = ch.J[k][k].rows();
  double num = 0.0;
  double den = 0.0;
  for (int i = 0; i < ch.K(); ++i) {
    const CMatrix relayed = effective_channel(ch, bf.F, k, i);
    for (size_t n = 0; n < bf.u[i].size(); ++n) {
      const double z = std::norm(v.head(M).dot(ch.J[k][i] * bf.u[i][n])) +
                       std::norm(v.tail(M).dot(relayed * bf.u[i][n]));
      if (i == k && static_cast<int>(n) == l) {
        num = z;
      } else {
        den += z;
      }
    }
  }
  den += v.dot(noise_covariance(ch, bf.F, cfg, k) * v).real();
  return num / den;
}

double approx_sinr_f(const RelaySinrForms& forms, const CVector& fbar) {
  const double den = fbar.dot(forms.den_tilde * fbar).real();
  if (!(den > 0.0)) throw std::invalid_argument("approx_sinr_f: non-positive denominator");
  return fbar.dot(forms.num_tilde * fbar).real() / den;
}

double approx_sinr_y(const RelaySinrForms& forms, const HermitianMatrix& Y) {
  const double den = real_trace_product(Y, forms.den_tilde);
  if (!(den > 0.0)) throw std::invalid_argument("approx_sinr_y: non-positive denominator");
  return real_trace_product(Y, forms.num_tilde) / den;
}

CVector stack_relay_filter(const CMatrix& F, cplx t) {
  CVector fbar(F.size() + 1);
  fbar.head(F.size()) = vec(F);
  fbar(F.size()) = t;
  return fbar;
}

RelayPowerForms build_power_forms(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg,
                                  double rho2) {
  if (rho2 < 0.0) throw std::invalid_argument("rho2 must be >= 0");
  RelayPowerForms p;
  p.rho2 = rho2;
  const int R = ch.R();
  int B = 0;
  for (const auto& row : bf.u) B += static_cast<int>(row.size());
  p.D.resize(R);
  p.Dp.resize(R);
  p.Dbar.resize(R);
  p.Dbar_sum.resize(R);
  for (int r = 0; r < R; ++r) {
    const Eigen::Index N = ch.H2[r][0].rows();
    const Eigen::Index N2 = N * N;
    const CMatrix I = CMatrix::Identity(N, N);
    p.Dbar_sum[r] = HermitianMatrix::Zero(N2 + 1, N2 + 1);
    p.D[r].resize(bf.u.size());
    p.Dp[r].resize(bf.u.size());
    p.Dbar[r].resize(bf.u.size());
    for (size_t k = 0; k < bf.u.size(); ++k) {
      for (size_t l = 0; l < bf.u[k].size(); ++l) {
        const CVector b = relay_b(ch, bf, r, static_cast<int>(k), static_cast<int>(l));
        HermitianMatrix D = b * b.adjoint();
        HermitianMatrix Dp = kron((D + (cfg.sigma_sq / B) * I).transpose(), I);
        HermitianMatrix Dbar = HermitianMatrix::Zero(N2 + 1, N2 + 1);
        Dbar.topLeftCorner(N2, N2) = Dp + (rho2 / 2.0) * CMatrix::Identity(N2, N2);
        p.Dbar_sum[r] += Dbar;
        p.D[r][k].push_back(std::move(D));
        p.Dp[r][k].push_back(std::move(Dp));
        p.Dbar[r][k].push_back(std::move(Dbar));
      }
    }
  }
  return p;
}

JointState init_joint_state(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg,
                            const SinrTargets& targets) {
  JointState st;
  const int R = ch.R();
  st.Y.resize(R);
  st.zeta_dot.resize(R);
  for (int r = 0; r < R; ++r) {
    const CVector fbar = stack_relay_filter(bf.F[r]);
    st.Y[r] = fbar * fbar.adjoint();
    st.zeta_dot[r].resize(targets.size());
    for (size_t k = 0; k < targets.size(); ++k) {
      st.zeta_dot[r][k].resize(targets[k].size());
      for (size_t l = 0; l < targets[k].size(); ++l) {
        const RelaySinrForms f = build_relay_forms(ch, bf, cfg, static_cast<int>(k), static_cast<int>(l), r);
        st.zeta_dot[r][k][l] = real_trace_product(st.Y[r], f.num_tilde) / targets[k][l];
      }
    }
  }
  return st;
}

conic::ConicProblem build_y_subproblem(const PerStream<RelaySinrForms>& forms, const RelayPowerForms& power,
                                       const SinrTargets& targets, const JointState& state, int r,
                                       double p_relay_max) {
  using namespace conic;
  const int n = static_cast<int>(power.Dbar_sum[r].rows());
  ConicProblem p;
  auto Y = p.add_psd_block("Y", n);
  p.add_objective(AffineExpr().add(Y, power.Dbar_sum[r]));
  for (size_t k = 0; k < targets.size(); ++k) {
    for (size_t l = 0; l < targets[k].size(); ++l) {
      p.add_constraint(AffineExpr().add(Y, forms[k][l].num_tilde / targets[k][l]), Sense::Equal,
                       state.zeta_dot[r][k][l]);
    }
  }
  p.add_constraint(AffineExpr().add(Y, power.Dbar_sum[r]), Sense::LessEqual, p_relay_max);
  HermitianMatrix theta = HermitianMatrix::Zero(n, n);
  theta(n - 1, n - 1) = 1.0;
  p.add_constraint(AffineExpr().add(Y, theta), Sense::Equal, 1.0);
  return p;
}

RelayFilterResult extract_relay_filter(const HermitianMatrix& Y, int N, double ratio_tol) {
  if (Y.rows() != static_cast<Eigen::Index>(N) * N + 1) {
    throw std::invalid_argument("extract_relay_filter: Y must be (N^2+1) x (N^2+1)");
  }
  const auto eig = hermitian_eig(Y, 1e-9);
  const double l1 = std::max(eig.values(0), 0.0);
  const double l2 = eig.values.size() > 1 ? std::max(eig.values(1), 0.0) : 0.0;
  const CVector v = std::sqrt(l1) * eig.vectors.col(0);
  const cplx t = v(v.size() - 1);
  if (!(std::abs(t) > 1e-12 * std::max(1.0, v.norm()))) {
    throw std::invalid_argument("extract_relay_filter: homogenizing entry vanishes");
  }
  // dividing by t removes the global phase and sets |t| = 1 in one step
  const CVector fbar = v / t;
  RelayFilterResult out;
  out.F = unvec(fbar.head(static_cast<Eigen::Index>(N) * N), N, N);
  out.ratio = l1 > 0.0 ? l2 / l1 : 1.0;
  out.rank_one = l1 > 0.0 && out.ratio <= ratio_tol;
  return out;
}

namespace {

struct JointSnapshot {
  PerStream<HermitianMatrix> X;
  std::vector<CMatrix> F;
  PerStream<double> sinrs;
  double power = 0.0;
  int iteration = 0;
};

}  // namespace

RunOutcome run_joint(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                     const SinrTargets& targets, const AlgorithmControl& ctrl) {
  cfg.validate();
  ctrl.validate();
  AlgorithmControl tx = ctrl;
  tx.incorporate_power_constraints = true;

  BeamformerSet cur = bf;
  AdmmState st = init_admm_state(bf, tx);
  InterferenceCollector collector;
  PrecomputedForms forms = precompute_forms(ch, cur, cfg);
  conic::SolverOptions sopts;
  sopts.tol = ctrl.solver_tol;

  RunOutcome out;
  std::optional<JointSnapshot> best;
  int rounds = 0;
  int skipped = 0;
  bool settled = false;
  while (st.s < ctrl.s_max) {
    if (!admm_step(forms, targets, tx, power_limits(cfg, cur.F), collector, st, out)) break;
    out.sinrs = all_stream_sinrs(forms, st.X);
    const double dev = max_sinr_deviation(out.sinrs, targets);
    const double power = total_power(forms, st.X, cur.F, cfg);
    out.total_power_history.push_back(power);
    out.sinr_deviation_history.push_back(dev);
    if (dev > ctrl.delta_max) continue;

    const double previous = best ? best->power : std::numeric_limits<double>::infinity();
    if (!best || power < best->power) best = JointSnapshot{st.X, cur.F, out.sinrs, power, st.s};
    if (power > previous * (1.0 - kRelayImprovementTol) || rounds >= kMaxRelayRounds) {
      settled = true;
      break;
    }
    ++rounds;

    for (int k = 0; k < cfg.K; ++k)
      for (int l = 0; l < cfg.d; ++l) cur.u[k][l] = rank_one_extract(st.X[k][l]).u;
    // All relays see the same snapshot, so they could run concurrently.
    const JointState js = init_joint_state(ch, cur, cfg, targets);
    const RelayPowerForms pf = build_power_forms(ch, cur, cfg, ctrl.rho2);
    std::vector<CMatrix> Fn = cur.F;
    for (int r = 0; r < cfg.R; ++r) {
      PerStream<RelaySinrForms> rf(cfg.K);
      for (int k = 0; k < cfg.K; ++k)
        for (int l = 0; l < cfg.d; ++l) rf[k].push_back(build_relay_forms(ch, cur, cfg, k, l, r));
      const auto sol = conic::solve(build_y_subproblem(rf, pf, targets, js, r, cfg.p_relay_max()), sopts);
      // A relay whose solve fails keeps its filter, which stays feasible.
      if (!sol.optimal()) {
        ++skipped;
        continue;
      }
      try {
        Fn[r] = extract_relay_filter(sol.blocks[0], cfg.N).F;
      } catch (const std::invalid_argument&) {
        ++skipped;
      }
    }
    cur.F = std::move(Fn);
    forms = precompute_forms(ch, cur, cfg);
  }

  out.iterations = st.s;
  out.message_count = collector.messages();
  out.infeasible_subproblems += skipped;
  if (best) {
    out.converged = true;
    out.X = std::move(best->X);
    out.F = std::move(best->F);
    out.sinrs = std::move(best->sinrs);
    out.total_power = best->power;
    if (!settled && out.diagnostics.empty()) {
      out.diagnostics = "s_max reached during relay rounds; kept the cheapest feasible iterate";
    }
  } else {
    out.X = st.X;
    out.F = cur.F;
    out.sinrs = all_stream_sinrs(forms, st.X);
    out.total_power = total_power(forms, st.X, cur.F, cfg);
    if (!out.aborted && out.diagnostics.empty()) {
      out.diagnostics = "s_max reached without meeting the SINR targets";
    }
  }
  const PrecomputedForms final_forms = precompute_forms(ch, BeamformerSet{cur.u, out.F, cur.vbar}, cfg);
  out.iflag = power_budget_violated(final_forms, out.X, out.F, cfg);
  return out;
}

}  // namespace relaybf
