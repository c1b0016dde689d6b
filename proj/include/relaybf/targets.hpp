#pragma once

#include <vector>

#include "relaybf/admm_tx.hpp"

namespace relaybf {

/// Interference-plus-noise covariance of stream (k,l) in the forward
/// direction: other users' streams and the user's own other streams through
/// the aggregate channel, plus R_n / d.
HermitianMatrix downlink_covariance(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k,
                                    int l);
/// Q^-1 H_kk u_kl / ||Q|| (2M entries).
CVector downlink_filter(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k, int l);

/// Channels of the reversed network, in which receiver k transmits to
/// transmitter k: J[k][i] <- J[i][k]^H, H2[r][i] <- G[i][r]^H, G[k][r] <- H2[r][k]^H.
ChannelSet reverse_channels(const ChannelSet& ch);
/// Relay filters of the reversed network, F_r^H.
std::vector<CMatrix> reverse_filters(const std::vector<CMatrix>& F);

/// Reverse-direction state: `rev` and `Frev` describe the reversed network,
/// `u` holds the two-slot transmit vectors [u(1); u(2)] of every stream.
struct ReverseLink {
  ChannelSet rev;
  std::vector<CMatrix> Frev;
  PerStream<CVector> u;
};

/// [J_kj, H'_kj] of the reversed network, M x 2M.
CMatrix reverse_stacked_channel(const ReverseLink& link, int k, int j);
/// Covariance at the original transmitter k for stream l, M x M. The noise
/// term folds both time slots together.
HermitianMatrix uplink_covariance(const ReverseLink& link, const NetworkConfig& cfg, int k, int l);
/// sqrt(p / d) times the unit direction of Q^-1 (J u(1) + H' u(2)).
CVector uplink_filter(const ReverseLink& link, const NetworkConfig& cfg, int k, int l);

struct MaxSinrResult {
  BeamformerSet bf;
  SinrTargets targets;
  int alternations = 0;
  bool converged = false;  ///< false means max_alt ran out first
  std::vector<double> sum_sinr_trace;  ///< entry 0 is the initial point
};

/// Alternates the forward and reverse filter updates with the relay filters
/// held fixed, starting from the random initial beamformers of `seed`. Stops
/// when the sum-SINR changes by less than `tol` or after `max_alt`
/// alternations.
MaxSinrResult max_sinr_targets(const NetworkConfig& cfg, const ChannelSet& ch, const std::vector<CMatrix>& F,
                               std::uint64_t seed, int max_alt, double tol = 1e-4);

struct TargetProbe {
  double w = 0.0;
  bool feasible = false;
  double total_power = 0.0;
  int iterations = 0;
};

struct TargetSearchResult {
  SinrTargets targets;
  double w = 0.0;
  double total_power = 0.0;  ///< of the run at the returned targets
  PerStream<double> sinrs;
  bool feasible = false;     ///< true when some probe with w > 0 succeeded
  std::vector<TargetProbe> probes;  ///< the lower-bound check first
};

/// gamma_lo + w (gamma_hi - gamma_lo)
SinrTargets interpolate_targets(const SinrTargets& lo, const SinrTargets& hi, double w);

/// Bisection on one scalar weight between the two target sets. `bf` fixes
/// the receive filters of every probe; pass the max-SINR receivers, since the
/// random initial ones cannot reach the upper targets for any w > 0. A probe
/// counts as feasible when the transmit ADMM converges without a budget
/// violation. `budget` bisection probes follow one check of gamma_lo, which
/// throws std::invalid_argument when it fails.
TargetSearchResult linear_target_search(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                                        const SinrTargets& lo, const SinrTargets& hi, int budget,
                                        const AlgorithmControl& ctrl);

}  // namespace relaybf
