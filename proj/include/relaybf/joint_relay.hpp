#pragma once

#include <vector>

#include "relaybf/admm_tx.hpp"

namespace relaybf {

/// f^H Q f + 2 re(f^H lin) + constant, with f = vec(F_r).
struct InhomogeneousForm {
  HermitianMatrix Q;
  CVector lin;
  double constant = 0.0;

  double evaluate(const CVector& f) const;
  InhomogeneousForm& operator+=(const InhomogeneousForm& o);
};

/// [[Q, lin], [lin^H, constant]], so fbar^H H fbar reproduces the form for
/// fbar = [f; 1].
HermitianMatrix homogenize(const InhomogeneousForm& form);

/// G_kr^H v_kl(2)
CVector relay_a(const ChannelSet& ch, const BeamformerSet& bf, int k, int l, int r);
/// H2_ri u_in
CVector relay_b(const ChannelSet& ch, const BeamformerSet& bf, int r, int i, int n);
/// b kron conj(a), so that a^H F b = vec(F)^T c.
CVector relay_c(const CVector& a, const CVector& b);
/// sum over the other relays s != r of a_kls^H F_s b_sin.
cplx relay_residual(const ChannelSet& ch, const BeamformerSet& bf, int k, int l, int r, int i, int n);

/// Approximate SINR quadratics of stream (k,l) as functions of f_r, with the
/// other relays' filters held at their values in `bf`.
struct RelaySinrForms {
  InhomogeneousForm numerator;
  InhomogeneousForm denominator;  ///< interference plus noise
  HermitianMatrix num_tilde;      ///< homogenized numerator, N^2+1
  HermitianMatrix den_tilde;      ///< homogenized denominator, N^2+1
};

/// |v(1)^H J u|^2 + |v(2)^H H' u|^2 of stream (i,n) at receiver stream (k,l),
/// as a form in f_r.
InhomogeneousForm relay_signal_form(const ChannelSet& ch, const BeamformerSet& bf, int k, int l, int r, int i,
                                    int n);
/// Second-slot noise power sigma^2 sum_s |v(2)^H G_ks F_s|^2 + sigma^2 |v(2)|^2
/// as a form in f_r. The other relays contribute a constant.
InhomogeneousForm relay_noise_form(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k,
                                   int l, int r);

RelaySinrForms build_relay_forms(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k,
                                 int l, int r);

/// SINR without the direct/relayed cross term.
double approx_sinr_u(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k, int l);
/// fbar^H num fbar / fbar^H den fbar
double approx_sinr_f(const RelaySinrForms& forms, const CVector& fbar);
/// tr(Y num) / tr(Y den)
double approx_sinr_y(const RelaySinrForms& forms, const HermitianMatrix& Y);

/// [vec(F); t]
CVector stack_relay_filter(const CMatrix& F, cplx t = 1.0);

struct RelayPowerForms {
  /// [r][k][l] N x N, H2_rk u_kl u_kl^H H2_rk^H
  std::vector<PerStream<HermitianMatrix>> D;
  /// [r][k][l] N^2 x N^2, (D + sigma^2 I / B)^T kron I
  std::vector<PerStream<HermitianMatrix>> Dp;
  /// [r][k][l] N^2+1, Dp + rho2/2 I bordered by a zero row and column
  std::vector<PerStream<HermitianMatrix>> Dbar;
  /// [r] sum over streams of Dbar
  std::vector<HermitianMatrix> Dbar_sum;
  double rho2 = 0.0;
};

RelayPowerForms build_power_forms(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg,
                                  double rho2);

/// Relay-side state, indexed [r][k][l]. zeta_dot is the numerator share each
/// relay has to keep, tr(Y num_kl) / gamma_kl.
struct JointState {
  std::vector<HermitianMatrix> Y;
  std::vector<PerStream<double>> zeta_dot;
};

/// Y_r = fbar fbar^H for the current filters (t = 1) and the numerator
/// shares those filters deliver.
JointState init_joint_state(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg,
                            const SinrTargets& targets);

/// min sum tr(Y Dbar) s.t. tr(Y num_kl)/gamma = zeta_dot for every stream,
/// the relay budget, tr(Y Theta) = 1 and Y PSD.
conic::ConicProblem build_y_subproblem(const PerStream<RelaySinrForms>& forms, const RelayPowerForms& power,
                                       const SinrTargets& targets, const JointState& state, int r,
                                       double p_relay_max);

struct RelayFilterResult {
  CMatrix F;
  double ratio = 0.0;  ///< lambda_2 / lambda_1 of Y
  bool rank_one = false;
};

/// Principal eigenvector scaled by sqrt(lambda_1), rotated and rescaled so
/// the last entry is 1, then unstacked into the N x N filter. Throws
/// std::invalid_argument when that entry vanishes.
RelayFilterResult extract_relay_filter(const HermitianMatrix& Y, int N, double ratio_tol = 1e-4);

inline constexpr double kRelayImprovementTol = 1e-4;
inline constexpr int kMaxRelayRounds = 20;

/// Transmit ADMM (with budgets) interleaved with relay rounds.
///
/// A relay round runs whenever the transmit iterate meets the targets for the
/// current filters. In a round every relay, against the same snapshot of
/// filters and receivers, solves its Y-subproblem with zeta_dot pinned to the
/// numerator shares it already delivers, i.e. it finds the cheapest filter
/// that keeps every desired-signal term. The transmit ADMM then resumes from
/// its current iterate and multipliers under the new filters.
///
/// The run stops once a round no longer lowers the total power by a relative
/// kRelayImprovementTol, or after kMaxRelayRounds rounds, and returns the
/// cheapest iterate that met the targets. Without any such iterate within
/// s_max the run reports non-convergence with the last iterate.
///
/// Messages are counted as for the transmit side, one collector exchange per
/// iteration.
RunOutcome run_joint(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                     const SinrTargets& targets, const AlgorithmControl& ctrl);

}  // namespace relaybf
