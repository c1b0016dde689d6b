#include "relaybf/admm_tx.hpp"

#include <algorithm>
#include <random>

namespace relaybf {

void AlgorithmControl::validate() const {
  if (s_max < 1) throw std::invalid_argument("s_max must be >= 1");
  if (!(delta_max > 0.0)) throw std::invalid_argument("delta_max must be > 0");
  if (!(rho > 0.0) || !(rho_c > 0.0)) throw std::invalid_argument("rho and rho_c must be > 0");
  if (!(tau > 0.0) || tau > 1.0) throw std::invalid_argument("tau must lie in (0, 1]");
  if (rho2 < 0.0) throw std::invalid_argument("rho2 must be >= 0");
  if (!(solver_tol > 0.0)) throw std::invalid_argument("solver tolerance must be > 0");
}

PowerLimits power_limits(const NetworkConfig& cfg, const std::vector<CMatrix>& F) {
  PowerLimits lim;
  lim.p_tx_max = cfg.p_tx_max();
  lim.p_relay_signal_max.resize(F.size());
  for (size_t r = 0; r < F.size(); ++r) {
    lim.p_relay_signal_max[r] = cfg.p_relay_max() - relay_noise_power(F, cfg, static_cast<int>(r));
  }
  return lim;
}

AdmmState init_admm_state(const BeamformerSet& bf, const AlgorithmControl& ctrl) {
  std::mt19937_64 rng(ctrl.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  AdmmState st;
  st.rho = ctrl.rho;
  st.rho_c = ctrl.rho_c;
  st.X = outer_products(bf.u);
  const size_t K = bf.u.size();
  for (auto* v : {&st.zeta, &st.zeta_b, &st.lambda, &st.mu, &st.mu_b}) v->resize(K);
  for (size_t k = 0; k < K; ++k) {
    const size_t dk = bf.u[k].size();
    for (auto* v : {&st.zeta, &st.zeta_b, &st.lambda, &st.mu, &st.mu_b}) {
      (*v)[k].resize(dk);
    }
    for (size_t l = 0; l < dk; ++l) {
      st.zeta[k][l] = unif(rng);
      st.zeta_b[k][l] = unif(rng);
      st.lambda[k][l] = unif(rng);
      st.mu[k][l] = unif(rng);
      st.mu_b[k][l] = unif(rng);
    }
  }
  return st;
}

double x_subproblem_rhs(const PrecomputedForms& forms, const SinrTargets& targets, const AdmmState& state, int k,
                        int l) {
  return targets[k][l] * (state.zeta[k][l] + forms.sigma_n[k][l]);
}

conic::ConicProblem build_x_subproblem(const PrecomputedForms& forms, const SinrTargets& targets,
                                       const AdmmState& state, int k, int l, const AlgorithmControl& ctrl,
                                       const PowerLimits& limits) {
  using namespace conic;
  const double rhs = x_subproblem_rhs(forms, targets, state, k, l);
  if (rhs < 0.0) {
    throw InfeasibleSubproblem("signal equality right-hand side is negative for stream (" + std::to_string(k) +
                               "," + std::to_string(l) + ")");
  }
  const int M = static_cast<int>(forms.Rdot[k].rows());
  ConicProblem p;
  auto X = p.add_psd_block("X", M);
  p.add_objective(AffineExpr().add(X, forms.Rdot[k]));
  p.add_constraint(AffineExpr().add(X, forms.Rkl[k][l][k]), Sense::Equal, rhs);
  if (ctrl.incorporate_power_constraints) {
    double others = 0.0;
    for (size_t m = 0; m < state.X[k].size(); ++m) {
      if (static_cast<int>(m) != l) others += state.X[k][m].trace().real();
    }
    p.add_constraint(AffineExpr().add(X, CMatrix::Identity(M, M)), Sense::LessEqual, limits.p_tx_max - others);
    const int R = static_cast<int>(forms.Rrk.size());
    for (int r = 0; r < R; ++r) {
      double used = 0.0;
      for (size_t j = 0; j < state.X.size(); ++j) {
        for (size_t m = 0; m < state.X[j].size(); ++m) {
          if (static_cast<int>(j) == k && static_cast<int>(m) == l) continue;
          used += real_trace_product(state.X[j][m], forms.Rrk[r][j]);
        }
      }
      p.add_constraint(AffineExpr().add(X, forms.Rrk[r][k]), Sense::LessEqual,
                       limits.p_relay_signal_max[r] - used);
    }
  }
  return p;
}

std::pair<double, double> update_aux(double lambda, double mu, double mu_b, double zeta_b_old, double rho) {
  const double zeta = -(lambda + mu) / rho - zeta_b_old;
  const double zeta_b = -(lambda + mu_b) / rho - zeta;
  return {zeta, zeta_b};
}

DualUpdate update_duals(const AdmmState& state, double signal_trace, double gamma, double sigma_n,
                        double interference, int k, int l) {
  const double z = state.zeta[k][l];
  const double zb = state.zeta_b[k][l];
  DualUpdate out;
  out.lambda = state.lambda[k][l] + state.rho * (z + zb);
  out.mu = state.mu[k][l] + state.rho_c * (z - signal_trace / gamma + sigma_n);
  out.mu_b = state.mu_b[k][l] + state.rho_c * (zb + interference);
  return out;
}

PerStream<double> InterferenceCollector::gather(const PrecomputedForms& forms, const PerStream<CMatrix>& X) {
  // Each processor (j,m) reports tr(X_jm R^j_kl) for every other stream; the
  // collector sums them per destination.
  PerStream<double> sums(X.size());
  std::int64_t B = 0;
  for (size_t k = 0; k < X.size(); ++k) {
    sums[k].assign(X[k].size(), 0.0);
    B += static_cast<std::int64_t>(X[k].size());
  }
  for (size_t k = 0; k < X.size(); ++k) {
    for (size_t l = 0; l < X[k].size(); ++l) {
      double s = 0.0;
      for (size_t j = 0; j < X.size(); ++j) {
        for (size_t m = 0; m < X[j].size(); ++m) {
          if (j == k && m == l) continue;
          s += real_trace_product(X[j][m], forms.Rkl[k][l][j]);
        }
      }
      sums[k][l] = s;
    }
  }
  messages_ += B * B;
  return sums;
}

double max_sinr_deviation(const PerStream<double>& sinrs, const SinrTargets& targets) {
  double dev = 0.0;
  for (size_t k = 0; k < sinrs.size(); ++k)
    for (size_t l = 0; l < sinrs[k].size(); ++l) dev = std::max(dev, std::abs(sinrs[k][l] - targets[k][l]));
  return dev;
}

bool power_budget_violated(const PrecomputedForms& forms, const PerStream<CMatrix>& X,
                           const std::vector<CMatrix>& F, const NetworkConfig& cfg) {
  const double slack = 1.0 + 1e-6;
  for (size_t k = 0; k < X.size(); ++k) {
    double p = 0.0;
    for (const auto& x : X[k]) p += x.trace().real();
    if (p > cfg.p_tx_max() * slack) return true;
  }
  for (size_t r = 0; r < F.size(); ++r) {
    double p = relay_noise_power(F, cfg, static_cast<int>(r));
    for (size_t k = 0; k < X.size(); ++k)
      for (const auto& x : X[k]) p += real_trace_product(x, forms.Rrk[r][k]);
    if (p > cfg.p_relay_max() * slack) return true;
  }
  return false;
}

bool admm_step(const PrecomputedForms& forms, const SinrTargets& targets, const AlgorithmControl& ctrl,
               const PowerLimits& limits, InterferenceCollector& collector, AdmmState& st, RunOutcome& out) {
  conic::SolverOptions sopts;
  sopts.tol = ctrl.solver_tol;
  const int K = static_cast<int>(targets.size());

  // X-phase: every stream solves its own subproblem against the iterate s.
  PerStream<CMatrix> Xn = st.X;
  for (int k = 0; k < K; ++k) {
    const int d = static_cast<int>(targets[k].size());
    for (int l = 0; l < d; ++l) {
      if (x_subproblem_rhs(forms, targets, st, k, l) < 0.0) {
        // No PSD X reaches a negative signal level; the cheapest point of
        // the relaxed (>=) constraint is X = 0.
        Xn[k][l].setZero();
        ++out.infeasible_subproblems;
        continue;
      }
      auto sol = conic::solve(build_x_subproblem(forms, targets, st, k, l, ctrl, limits), sopts);
      if (sol.status == conic::Status::Infeasible && ctrl.incorporate_power_constraints) {
        // The budgets left over by the other streams cannot carry this
        // stream; keep the previous covariance and let iflag report it.
        ++out.infeasible_subproblems;
        continue;
      }
      if (!sol.optimal()) {
        out.aborted = true;
        out.diagnostics = "X-subproblem (" + std::to_string(k) + "," + std::to_string(l) + ") at iteration " +
                          std::to_string(st.s + 1) + ": " + conic::to_string(sol.status) + " (" + sol.diagnostics +
                          ")";
        return false;
      }
      Xn[k][l] = sol.blocks[0];
    }
  }
  st.X = std::move(Xn);

  // Barrier, then the collector hands every stream its interference sum.
  const PerStream<double> interference = collector.gather(forms, st.X);
  for (int k = 0; k < K; ++k) {
    for (size_t l = 0; l < targets[k].size(); ++l) {
      auto [z, zb] = update_aux(st.lambda[k][l], st.mu[k][l], st.mu_b[k][l], st.zeta_b[k][l], st.rho);
      st.zeta[k][l] = z;
      st.zeta_b[k][l] = zb;
      const double sig = real_trace_product(st.X[k][l], forms.Rkl[k][l][k]);
      const DualUpdate du = update_duals(st, sig, targets[k][l], forms.sigma_n[k][l], interference[k][l], k,
                                         static_cast<int>(l));
      st.lambda[k][l] = du.lambda;
      st.mu[k][l] = du.mu;
      st.mu_b[k][l] = du.mu_b;
    }
  }
  ++st.s;
  return true;
}

RunOutcome admm_run(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                    const SinrTargets& targets, const AlgorithmControl& ctrl) {
  cfg.validate();
  ctrl.validate();
  const PrecomputedForms forms = precompute_forms(ch, bf, cfg);
  const PowerLimits limits = power_limits(cfg, bf.F);
  AdmmState st = init_admm_state(bf, ctrl);
  InterferenceCollector collector;

  RunOutcome out;
  out.F = bf.F;
  while (st.s < ctrl.s_max) {
    if (!admm_step(forms, targets, ctrl, limits, collector, st, out)) break;
    out.sinrs = all_stream_sinrs(forms, st.X);
    const double dev = max_sinr_deviation(out.sinrs, targets);
    out.total_power_history.push_back(total_power(forms, st.X, bf.F, cfg));
    out.sinr_deviation_history.push_back(dev);
    if (dev <= ctrl.delta_max) {
      out.converged = true;
      break;
    }
  }
  out.iterations = st.s;
  out.X = st.X;
  out.sinrs = all_stream_sinrs(forms, st.X);
  out.total_power = total_power(forms, st.X, bf.F, cfg);
  out.iflag = power_budget_violated(forms, st.X, bf.F, cfg);
  out.message_count = collector.messages();
  if (!out.converged && !out.aborted && out.diagnostics.empty()) {
    out.diagnostics = "s_max reached without meeting the SINR targets";
  }
  return out;
}

RankOneResult rank_one_extract(const HermitianMatrix& X, double ratio_tol) {
  const auto eig = hermitian_eig(X, 1e-9);
  RankOneResult r;
  const double l1 = std::max(eig.values(0), 0.0);
  const double l2 = eig.values.size() > 1 ? std::max(eig.values(1), 0.0) : 0.0;
  r.u = std::sqrt(l1) * eig.vectors.col(0);
  r.ratio = l1 > 0.0 ? l2 / l1 : 1.0;
  r.rank_one = l1 > 0.0 && r.ratio <= ratio_tol;
  return r;
}

}  // namespace relaybf
