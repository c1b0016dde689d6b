#include "relaybf/baselines.hpp"

#include <random>
#include <stdexcept>

namespace relaybf {

const char* to_string(Algorithm a) {
  switch (a) {
    case Algorithm::Proposed:
      return "proposed";
    case Algorithm::AdmmBg:
      return "admm-bg";
    case Algorithm::Adal:
      return "adal";
    case Algorithm::Centralized:
      return "centralized";
    case Algorithm::Joint:
      return "joint";
  }
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (Algorithm a : {Algorithm::Proposed, Algorithm::AdmmBg, Algorithm::Adal, Algorithm::Centralized,
                      Algorithm::Joint}) {
    if (name == to_string(a)) return a;
  }
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

CentralizedResult centralized_solve(const PrecomputedForms& forms, const SinrTargets& targets,
                                    const NetworkConfig& cfg, const std::vector<CMatrix>& F,
                                    bool incorporate_power_constraints, double tol) {
  using namespace conic;
  const int K = static_cast<int>(targets.size());
  ConicProblem p;
  std::vector<std::vector<BlockVar>> X(K);
  for (int k = 0; k < K; ++k) {
    const int M = static_cast<int>(forms.Rdot[k].rows());
    for (size_t l = 0; l < targets[k].size(); ++l) {
      X[k].push_back(p.add_psd_block("X" + std::to_string(k) + "_" + std::to_string(l), M));
      p.add_objective(AffineExpr().add(X[k][l], forms.Rdot[k]));
    }
  }
  for (int k = 0; k < K; ++k) {
    for (size_t l = 0; l < targets[k].size(); ++l) {
      AffineExpr e;
      for (int j = 0; j < K; ++j) {
        for (size_t m = 0; m < targets[j].size(); ++m) {
          if (j == k && m == l) {
            e.add(X[j][m], forms.Rkl[k][l][j] / targets[k][l]);
          } else {
            e.add(X[j][m], -forms.Rkl[k][l][j]);
          }
        }
      }
      p.add_constraint(std::move(e), Sense::GreaterEqual, forms.sigma_n[k][l]);
    }
  }
  if (incorporate_power_constraints) {
    const PowerLimits lim = power_limits(cfg, F);
    for (int k = 0; k < K; ++k) {
      AffineExpr e;
      const int M = static_cast<int>(forms.Rdot[k].rows());
      for (auto& b : X[k]) e.add(b, CMatrix::Identity(M, M));
      p.add_constraint(std::move(e), Sense::LessEqual, lim.p_tx_max);
    }
    for (size_t r = 0; r < forms.Rrk.size(); ++r) {
      AffineExpr e;
      for (int k = 0; k < K; ++k)
        for (auto& b : X[k]) e.add(b, forms.Rrk[r][k]);
      p.add_constraint(std::move(e), Sense::LessEqual, lim.p_relay_signal_max[r]);
    }
  }

  SolverOptions opts;
  opts.tol = tol;
  const ConicSolution sol = solve(p, opts);
  CentralizedResult out;
  out.status = sol.status;
  out.diagnostics = sol.diagnostics;
  if (!sol.optimal()) return out;
  out.X.resize(K);
  int b = 0;
  for (int k = 0; k < K; ++k)
    for (size_t l = 0; l < targets[k].size(); ++l) out.X[k].push_back(sol.blocks[b++]);
  out.objective = stream_power_objective(forms, out.X);
  out.total_power = total_power(forms, out.X, F, cfg);
  return out;
}

// ---------------------------------------------------------------------------
// ADMM-BG
// ---------------------------------------------------------------------------

conic::ConicProblem build_bg_subproblem(const PrecomputedForms& forms, const SinrTargets& targets,
                                        const AdmmBgState& st, int k, int l) {
  using namespace conic;
  const double rhs = x_subproblem_rhs(forms, targets, st.base, k, l);
  if (rhs < 0.0) {
    throw InfeasibleSubproblem("signal equality right-hand side is negative for stream (" + std::to_string(k) +
                               "," + std::to_string(l) + ")");
  }
  const int M = static_cast<int>(forms.Rdot[k].rows());
  ConicProblem p;
  auto X = p.add_psd_block("X", M);
  auto pw = p.add_scalar("p");
  p.add_objective(AffineExpr().add(pw, 1.0 - st.eta2[k][l]));
  p.add_quadratic(0.5 * st.base.rho, AffineExpr(-st.t[k][l]).add(pw, 1.0));
  p.add_constraint(AffineExpr().add(X, forms.Rkl[k][l][k]), Sense::Equal, rhs);
  p.add_constraint(AffineExpr().add(pw, 1.0).add(X, -forms.Rdot[k]), Sense::Equal, 0.0);
  return p;
}

double bg_slack_update(double p, double eta2, double rho) { return std::max(0.0, p - eta2 / rho); }

RunOutcome admm_bg_run(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                       const SinrTargets& targets, const AlgorithmControl& ctrl) {
  cfg.validate();
  ctrl.validate();
  const PrecomputedForms forms = precompute_forms(ch, bf, cfg);
  AdmmBgState st;
  st.base = init_admm_state(bf, ctrl);
  {
    std::mt19937_64 rng(derive_seed(ctrl.seed, 0xb6));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    st.p.resize(cfg.K);
    st.t.resize(cfg.K);
    st.eta2.resize(cfg.K);
    for (int k = 0; k < cfg.K; ++k) {
      st.p[k].resize(cfg.d);
      st.t[k].resize(cfg.d);
      st.eta2[k].resize(cfg.d);
      for (int l = 0; l < cfg.d; ++l) {
        st.p[k][l] = real_trace_product(st.base.X[k][l], forms.Rdot[k]);
        st.t[k][l] = st.p[k][l];
        st.eta2[k][l] = unif(rng);
      }
    }
  }
  InterferenceCollector collector;
  conic::SolverOptions sopts;
  sopts.tol = ctrl.solver_tol;

  RunOutcome out;
  out.F = bf.F;
  AdmmState& b = st.base;
  while (b.s < ctrl.s_max) {
    PerStream<CMatrix> Xn = b.X;
    for (int k = 0; k < cfg.K && !out.aborted; ++k) {
      for (int l = 0; l < cfg.d; ++l) {
        if (x_subproblem_rhs(forms, targets, b, k, l) < 0.0) {
          Xn[k][l] = CMatrix::Zero(cfg.M, cfg.M);
          st.p[k][l] = 0.0;
          ++out.infeasible_subproblems;
          continue;
        }
        auto sol = conic::solve(build_bg_subproblem(forms, targets, st, k, l), sopts);
        if (!sol.optimal()) {
          out.aborted = true;
          out.diagnostics = "ADMM-BG subproblem (" + std::to_string(k) + "," + std::to_string(l) +
                            ") at iteration " + std::to_string(b.s + 1) + ": " + conic::to_string(sol.status) +
                            " (" + sol.diagnostics + ")";
          break;
        }
        Xn[k][l] = sol.blocks[0];
        st.p[k][l] = sol.scalars[0];
      }
    }
    if (out.aborted) break;
    b.X = std::move(Xn);

    const PerStream<double> interference = collector.gather(forms, b.X);
    for (int k = 0; k < cfg.K; ++k) {
      for (int l = 0; l < cfg.d; ++l) {
        auto [z, zb] = update_aux(b.lambda[k][l], b.mu[k][l], b.mu_b[k][l], b.zeta_b[k][l], b.rho);
        b.zeta[k][l] = z;
        b.zeta_b[k][l] = zb;
        const double sig = real_trace_product(b.X[k][l], forms.Rkl[k][l][k]);
        const DualUpdate du =
            update_duals(b, sig, targets[k][l], forms.sigma_n[k][l], interference[k][l], k, l);
        b.lambda[k][l] = du.lambda;
        b.mu[k][l] = du.mu;
        b.mu_b[k][l] = du.mu_b;
        st.t[k][l] = bg_slack_update(st.p[k][l], st.eta2[k][l], b.rho);
        st.eta2[k][l] += b.rho_c * (st.t[k][l] - st.p[k][l]);
      }
    }
    ++b.s;

    out.sinrs = all_stream_sinrs(forms, b.X);
    const double dev = max_sinr_deviation(out.sinrs, targets);
    out.total_power_history.push_back(total_power(forms, b.X, bf.F, cfg));
    out.sinr_deviation_history.push_back(dev);
    if (dev <= ctrl.delta_max) {
      out.converged = true;
      break;
    }
  }
  out.iterations = b.s;
  out.X = b.X;
  out.sinrs = all_stream_sinrs(forms, b.X);
  out.total_power = total_power(forms, b.X, bf.F, cfg);
  out.iflag = power_budget_violated(forms, b.X, bf.F, cfg);
  out.message_count = collector.messages();
  if (!out.converged && !out.aborted && out.diagnostics.empty()) {
    out.diagnostics = "s_max reached without meeting the SINR targets";
  }
  return out;
}

// ---------------------------------------------------------------------------
// ADAL
// ---------------------------------------------------------------------------

conic::ConicProblem build_adal_subproblem(const PrecomputedForms& forms, const SinrTargets& targets,
                                          const AdalState& st, int k, int l) {
  using namespace conic;
  const int K = static_cast<int>(targets.size());
  const int d = static_cast<int>(targets[0].size());
  const int B = K * d;
  const int own = k * d + l;
  const int M = static_cast<int>(forms.Rdot[k].rows());

  RVector others = RVector::Zero(B);
  for (int j = 0; j < K; ++j)
    for (int m = 0; m < d; ++m)
      if (j != k || m != l) others += st.zeta_arrow[j][m];

  ConicProblem p;
  auto X = p.add_psd_block("X", M);
  std::vector<ScalarVar> z;
  for (int c = 0; c < B; ++c) z.push_back(p.add_scalar("zeta" + std::to_string(c)));
  AffineExpr obj;
  obj.add(X, forms.Rdot[k]);
  for (int c = 0; c < B; ++c) obj.add(z[c], st.lambda(c));
  p.add_objective(obj);
  for (int c = 0; c < B; ++c) p.add_quadratic(0.5 * st.rho, AffineExpr(others(c)).add(z[c], 1.0));
  for (int j = 0; j < K; ++j) {
    for (int m = 0; m < d; ++m) {
      const int c = j * d + m;
      if (c == own) {
        p.add_constraint(AffineExpr().add(z[c], 1.0).add(X, -forms.Rkl[k][l][k] / targets[k][l]), Sense::Equal,
                         -forms.sigma_n[k][l]);
      } else {
        // interference this stream causes at stream (j,m)
        p.add_constraint(AffineExpr().add(z[c], 1.0).add(X, forms.Rkl[j][m][k]), Sense::Equal, 0.0);
      }
    }
  }
  return p;
}

RVector adal_relax(const RVector& zeta_arrow, const RVector& zeta, double tau) {
  return zeta_arrow + tau * (zeta - zeta_arrow);
}

AlgorithmControl adal_defaults(AlgorithmControl base) {
  base.rho = 9.0;
  base.rho_c = 0.5;
  base.tau = 0.3;
  return base;
}

RunOutcome adal_run(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                    const SinrTargets& targets, const AlgorithmControl& ctrl) {
  cfg.validate();
  ctrl.validate();
  const PrecomputedForms forms = precompute_forms(ch, bf, cfg);
  const int K = cfg.K;
  const int d = cfg.d;
  const int B = cfg.B();
  AdalState st;
  st.tau = ctrl.tau;
  st.rho = ctrl.rho;
  st.X = outer_products(bf.u);
  {
    std::mt19937_64 rng(ctrl.seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto random_vec = [&]() {
      RVector v(B);
      for (int c = 0; c < B; ++c) v(c) = unif(rng);
      return v;
    };
    st.lambda = random_vec();
    st.zeta_vec.assign(K, std::vector<RVector>(d));
    st.zeta_arrow.assign(K, std::vector<RVector>(d));
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < d; ++l) {
        st.zeta_arrow[k][l] = random_vec();
        st.zeta_vec[k][l] = st.zeta_arrow[k][l];
      }
    }
  }
  conic::SolverOptions sopts;
  sopts.tol = ctrl.solver_tol;

  RunOutcome out;
  out.F = bf.F;
  int s = 0;
  while (s < ctrl.s_max) {
    PerStream<CMatrix> Xn = st.X;
    PerStream<RVector> Zn = st.zeta_vec;
    for (int k = 0; k < K && !out.aborted; ++k) {
      for (int l = 0; l < d; ++l) {
        auto sol = conic::solve(build_adal_subproblem(forms, targets, st, k, l), sopts);
        if (!sol.optimal()) {
          out.aborted = true;
          out.diagnostics = "ADAL subproblem (" + std::to_string(k) + "," + std::to_string(l) + ") at iteration " +
                            std::to_string(s + 1) + ": " + conic::to_string(sol.status) + " (" +
                            sol.diagnostics + ")";
          break;
        }
        Xn[k][l] = sol.blocks[0];
        Zn[k][l] = Eigen::Map<const RVector>(sol.scalars.data(), B);
      }
    }
    if (out.aborted) break;
    st.X = std::move(Xn);
    st.zeta_vec = std::move(Zn);

    // Every stream sends its relaxed vector to the collector, which returns
    // the multiplier update: B^2 scalars each way.
    RVector total = RVector::Zero(B);
    for (int k = 0; k < K; ++k) {
      for (int l = 0; l < d; ++l) {
        st.zeta_arrow[k][l] = adal_relax(st.zeta_arrow[k][l], st.zeta_vec[k][l], st.tau);
        total += st.zeta_arrow[k][l];
      }
    }
    st.lambda += st.tau * st.rho * total;
    out.message_count += message_load(Algorithm::Adal, B);
    ++s;

    out.sinrs = all_stream_sinrs(forms, st.X);
    const double dev = max_sinr_deviation(out.sinrs, targets);
    out.total_power_history.push_back(total_power(forms, st.X, bf.F, cfg));
    out.sinr_deviation_history.push_back(dev);
    if (dev <= ctrl.delta_max) {
      out.converged = true;
      break;
    }
  }
  out.iterations = s;
  out.X = st.X;
  out.sinrs = all_stream_sinrs(forms, st.X);
  out.total_power = total_power(forms, st.X, bf.F, cfg);
  out.iflag = power_budget_violated(forms, st.X, bf.F, cfg);
  if (!out.converged && !out.aborted && out.diagnostics.empty()) {
    out.diagnostics = "s_max reached without meeting the SINR targets";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Accounting
// ---------------------------------------------------------------------------

std::int64_t complexity_units_per_processor(Algorithm algo, int M, int N, int B) {
  if (M < 1 || N < 1 || B < 1) throw std::invalid_argument("complexity_units: dimensions must be >= 1");
  switch (algo) {
    case Algorithm::Proposed:
      return M + 5;
    case Algorithm::AdmmBg:
      return 2 * (M + 1) + 6;
    case Algorithm::Adal:
      return static_cast<std::int64_t>(B) * (M + B) + 2 * B;
    case Algorithm::Joint:
      // relay processor add-on
      return static_cast<std::int64_t>(B) * (2 * N + 5);
    case Algorithm::Centralized:
      break;
  }
  throw std::invalid_argument(std::string("complexity_units: no per-processor count for ") + to_string(algo));
}

std::int64_t complexity_units(Algorithm algo, int M, int N, int B, int R) {
  if (R < 1) throw std::invalid_argument("complexity_units: R must be >= 1");
  if (algo == Algorithm::Joint) {
    return B * complexity_units_per_processor(Algorithm::Proposed, M, N, B) +
           R * complexity_units_per_processor(Algorithm::Joint, M, N, B);
  }
  return B * complexity_units_per_processor(algo, M, N, B);
}

std::int64_t message_load(Algorithm algo, int B) {
  if (B < 1) throw std::invalid_argument("message_load: B must be >= 1");
  const std::int64_t b2 = static_cast<std::int64_t>(B) * B;
  switch (algo) {
    case Algorithm::Adal:
      return 2 * b2;
    case Algorithm::Centralized:
      return 0;
    default:
      return b2;
  }
}

}  // namespace relaybf
