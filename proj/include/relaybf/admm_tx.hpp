#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "relaybf/conic.hpp"
#include "relaybf/network.hpp"

namespace relaybf {

struct AlgorithmControl {
  int s_max = 200;
  double delta_max = 1e-4;
  bool incorporate_power_constraints = false;
  double rho = 1.2;
  double rho_c = 0.5;
  double tau = 0.3;      ///< ADAL relaxation step
  double rho2 = 0.0;     ///< border regularization of the relay power blocks
  std::uint64_t seed = 1;  ///< seeds the random initial multipliers
  double solver_tol = 1e-9;

  void validate() const;
};

/// Per-stream state of the proposed transmit-side ADMM.
struct AdmmState {
  PerStream<CMatrix> X;
  PerStream<double> zeta;
  PerStream<double> zeta_b;
  PerStream<double> lambda;
  PerStream<double> mu;
  PerStream<double> mu_b;
  double rho = 1.2;
  double rho_c = 0.5;
  int s = 0;
};

/// Transmit and relay power budgets as seen by the per-stream subproblems.
struct PowerLimits {
  double p_tx_max = 0.0;
  /// p_r^max - sigma_r^2 tr(F_r F_r^H): what is left for the stream signals.
  std::vector<double> p_relay_signal_max;
};

PowerLimits power_limits(const NetworkConfig& cfg, const std::vector<CMatrix>& F);

struct RunOutcome {
  bool converged = false;
  bool iflag = false;
  /// Set when a subproblem solve failed numerically and the run was aborted.
  bool aborted = false;
  int iterations = 0;
  std::vector<double> total_power_history;
  std::vector<double> sinr_deviation_history;  ///< max_{k,l} |SINR - gamma| per iteration
  PerStream<CMatrix> X;
  std::vector<CMatrix> F;  ///< relay filters the final X were optimized against
  PerStream<double> sinrs;
  double total_power = 0.0;
  std::int64_t message_count = 0;
  int infeasible_subproblems = 0;
  std::string diagnostics;
};

/// Thrown by `build_x_subproblem` when gamma (zeta + sigma_n^2) < 0, which
/// no PSD X can meet.
class InfeasibleSubproblem : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Random U[0,1] auxiliaries and multipliers, X from the initial transmit vectors.
AdmmState init_admm_state(const BeamformerSet& bf, const AlgorithmControl& ctrl);

/// Right-hand side gamma (zeta + sigma_n^2) of the per-stream signal equality.
double x_subproblem_rhs(const PrecomputedForms& forms, const SinrTargets& targets, const AdmmState& state, int k,
                        int l);

/// min tr(X Rdot_k) s.t. tr(X R^k_kl) = gamma (zeta + sigma_n^2), X PSD, and
/// optionally the transmit/relay budgets left over by the other streams.
conic::ConicProblem build_x_subproblem(const PrecomputedForms& forms, const SinrTargets& targets,
                                       const AdmmState& state, int k, int l, const AlgorithmControl& ctrl,
                                       const PowerLimits& limits);

/// Closed-form minimizers of the auxiliary subproblem; the second value uses
/// the freshly updated first one.
std::pair<double, double> update_aux(double lambda, double mu, double mu_b, double zeta_b_old, double rho);

struct DualUpdate {
  double lambda;
  double mu;
  double mu_b;
};

/// `interference` is sum_{(j,m) != (k,l)} tr(X_jm R^j_kl) at the new iterate.
DualUpdate update_duals(const AdmmState& state, double signal_trace, double gamma, double sigma_n,
                        double interference, int k, int l);

/// Aggregates the interference each stream receives. Every processor sends
/// B-1 scalars in and gets one back, so each gather costs B^2 messages.
class InterferenceCollector {
 public:
  PerStream<double> gather(const PrecomputedForms& forms, const PerStream<CMatrix>& X);
  std::int64_t messages() const { return messages_; }

 private:
  std::int64_t messages_ = 0;
};

/// max_{k,l} |SINR_kl - gamma_kl|
double max_sinr_deviation(const PerStream<double>& sinrs, const SinrTargets& targets);

/// True when any transmitter or relay exceeds its budget (relative slack 1e-6).
bool power_budget_violated(const PrecomputedForms& forms, const PerStream<CMatrix>& X,
                           const std::vector<CMatrix>& F, const NetworkConfig& cfg);

/// One iteration of the transmit side: every X-subproblem, the collector
/// barrier, then the auxiliary and dual updates. Returns false with
/// out.aborted and out.diagnostics set when a subproblem solve fails.
bool admm_step(const PrecomputedForms& forms, const SinrTargets& targets, const AlgorithmControl& ctrl,
               const PowerLimits& limits, InterferenceCollector& collector, AdmmState& st, RunOutcome& out);

RunOutcome admm_run(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                    const SinrTargets& targets, const AlgorithmControl& ctrl);

struct RankOneResult {
  CVector u;
  double ratio = 0.0;  ///< lambda_2 / lambda_1
  bool rank_one = false;
};

/// u = sqrt(lambda_1) v_1; rank_one is false when lambda_2/lambda_1 > ratio_tol.
RankOneResult rank_one_extract(const HermitianMatrix& X, double ratio_tol = 1e-4);

}  // namespace relaybf
