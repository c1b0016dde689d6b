#pragma once

#include <cstdint>
#include <string>

#include "relaybf/admm_tx.hpp"

namespace relaybf {

enum class Algorithm { Proposed, AdmmBg, Adal, Centralized, Joint };

const char* to_string(Algorithm a);
/// Accepts proposed, admm-bg, adal, centralized, joint. Throws std::invalid_argument otherwise.
Algorithm parse_algorithm(const std::string& name);

struct CentralizedResult {
  conic::Status status = conic::Status::NumericalFailure;
  PerStream<CMatrix> X;
  /// sum_{k,l} tr(X_kl Rdot_k), the optimized objective.
  double objective = 0.0;
  /// objective plus the amplified relay noise.
  double total_power = 0.0;
  std::string diagnostics;

  bool optimal() const { return status == conic::Status::Optimal; }
};

/// One semidefinite relaxation over all streams with the SINR constraints in
/// summation form and, when requested, the transmit and relay budgets.
CentralizedResult centralized_solve(const PrecomputedForms& forms, const SinrTargets& targets,
                                    const NetworkConfig& cfg, const std::vector<CMatrix>& F,
                                    bool incorporate_power_constraints = false, double tol = 1e-9);

/// Extra per-stream state of ADMM-BG.
struct AdmmBgState {
  AdmmState base;
  PerStream<double> p;     ///< tr(X Rdot) as returned by the subproblem
  PerStream<double> t;     ///< nonnegative slack tracking p
  PerStream<double> eta2;  ///< multiplier of p = t
};

/// min (1 - eta2) p + rho/2 (t - p)^2 over (p, X) with the signal equality and
/// p = tr(X Rdot_k).
conic::ConicProblem build_bg_subproblem(const PrecomputedForms& forms, const SinrTargets& targets,
                                        const AdmmBgState& st, int k, int l);

/// Slack update t = max(0, p - eta2 / rho).
double bg_slack_update(double p, double eta2, double rho);

RunOutcome admm_bg_run(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                       const SinrTargets& targets, const AlgorithmControl& ctrl);

/// ADAL state: zeta_vec[k][l] and zeta_arrow[k][l] are length-B vectors
/// indexed by the flattened stream index k*d + l.
struct AdalState {
  PerStream<CMatrix> X;
  PerStream<RVector> zeta_vec;
  PerStream<RVector> zeta_arrow;
  RVector lambda;
  double tau = 0.3;
  double rho = 9.0;
};

/// Joint (zeta, X) problem of one stream: B equalities (own signal plus the
/// interference it causes at every other stream).
conic::ConicProblem build_adal_subproblem(const PrecomputedForms& forms, const SinrTargets& targets,
                                          const AdalState& st, int k, int l);

/// zeta_arrow + tau (zeta - zeta_arrow)
RVector adal_relax(const RVector& zeta_arrow, const RVector& zeta, double tau);

RunOutcome adal_run(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                    const SinrTargets& targets, const AlgorithmControl& ctrl);

/// Step sizes tuned for ADAL (rho 9, rho_c 0.5, tau 0.3), otherwise `base`.
AlgorithmControl adal_defaults(AlgorithmControl base = {});

/// Simplified per-processor complexity count (variables times constraints).
/// Throws std::invalid_argument for Centralized.
std::int64_t complexity_units_per_processor(Algorithm algo, int M, int N, int B);
/// Per-iteration total: per-processor units times the processor count. For
/// Joint: B streams at M+5 plus R relays at B(2N+5).
std::int64_t complexity_units(Algorithm algo, int M, int N, int B, int R);

/// Scalars exchanged per iteration: B^2, or 2B^2 for ADAL.
std::int64_t message_load(Algorithm algo, int B);

}  // namespace relaybf
