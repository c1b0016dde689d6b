#pragma once

#include <cstdint>
#include <vector>

#include "relaybf/numerics.hpp"

namespace relaybf {

/// Per-stream container indexed [user][stream].
template <class T>
using PerStream = std::vector<std::vector<T>>;

struct NetworkConfig {
  int K = 3;  ///< users (transmitter/receiver pairs)
  int d = 2;  ///< streams per user
  int M = 10; ///< antennas per transmitter and per receiver
  int N = 8;  ///< antennas per relay
  int R = 3;  ///< relays
  double sigma_sq = 1.0;  ///< noise power shared by relays and both receive slots
  double snr_t_db = 12.0;
  double snr_r_db = 12.0;
  double tx_relay_dist_km = 1.0;
  double relay_rx_dist_km = 1.0;
  double pathloss_exponent = 3.0;
  double shadow_std_db = 8.0;

  int B() const { return K * d; }
  double p_tx_max() const { return from_db(snr_t_db) * sigma_sq; }
  double p_relay_max() const { return from_db(snr_r_db) * sigma_sq; }

  /// Throws std::invalid_argument on non-positive counts, d > M, or sigma_sq <= 0.
  void validate() const;
};

struct ChannelSet {
  std::vector<std::vector<CMatrix>> J;   ///< [k][i] M x M, transmitter i -> receiver k
  std::vector<std::vector<CMatrix>> G;   ///< [k][r] M x N, relay r -> receiver k
  std::vector<std::vector<CMatrix>> H2;  ///< [r][i] N x M, transmitter i -> relay r

  int K() const { return static_cast<int>(J.size()); }
  int R() const { return static_cast<int>(H2.size()); }
};

struct BeamformerSet {
  PerStream<CVector> u;     ///< M x 1 transmit vectors
  std::vector<CMatrix> F;   ///< N x N relay filters
  PerStream<CVector> vbar;  ///< 2M x 1 stacked receive vectors, slot 1 on top
};

struct PrecomputedForms {
  std::vector<HermitianMatrix> Rdot;             ///< [k]  I + sum_r Rrk
  std::vector<std::vector<HermitianMatrix>> Rrk; ///< [r][k]
  PerStream<std::vector<HermitianMatrix>> Rkl;   ///< [k][l][i] H_ki^H vbar vbar^H H_ki
  PerStream<double> sigma_n;                     ///< [k][l] vbar^H Rn_k vbar
  std::vector<HermitianMatrix> Rn;               ///< [k] 2M x 2M aggregate noise covariance
};

using SinrTargets = PerStream<double>;

/// Stable 64-bit seed mixing (splitmix64 finalizer over the inputs).
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0);

ChannelSet generate_channels(const NetworkConfig& cfg, std::uint64_t seed);

/// Random transmit directions at equal stream power, relay filters scaled to
/// full relay power, receive vectors with per-slot norm sqrt(0.5).
BeamformerSet init_beamformers(const NetworkConfig& cfg, const ChannelSet& ch, std::uint64_t seed);

/// sum_r G_kr F_r H2_ri
CMatrix effective_channel(const ChannelSet& ch, const std::vector<CMatrix>& F, int k, int i);
/// [J_ki; effective_channel] (2M x M)
CMatrix aggregate_channel(const ChannelSet& ch, const std::vector<CMatrix>& F, int k, int i);
HermitianMatrix noise_covariance(const ChannelSet& ch, const std::vector<CMatrix>& F, const NetworkConfig& cfg,
                                 int k);

PrecomputedForms precompute_forms(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg);

/// SINR from the received-signal model with the filters in `bf`.
double stream_sinr(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg, int k, int l);
/// SINR from quadratic forms with transmit covariances X[j][m].
double stream_sinr_quadratic(const PrecomputedForms& forms, const PerStream<CMatrix>& X, int k, int l);
/// SINR from quadratic forms with transmit vectors u[j][m].
double stream_sinr_quadratic(const PrecomputedForms& forms, const PerStream<CVector>& u, int k, int l);

PerStream<CMatrix> outer_products(const PerStream<CVector>& u);

double transmit_power(const BeamformerSet& bf, int k);
/// Includes the amplified relay noise sigma_r^2 tr(F F^H).
double relay_power(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg, int r);
double relay_noise_power(const std::vector<CMatrix>& F, const NetworkConfig& cfg, int r);

/// sum_{k,l} tr(X_kl Rdot_k): the part of the total power the transmit
/// filters control.
double stream_power_objective(const PrecomputedForms& forms, const PerStream<CMatrix>& X);
/// Transmit plus relay power: stream_power_objective + sum_r sigma_r^2 tr(F_r F_r^H).
double total_power(const PrecomputedForms& forms, const PerStream<CMatrix>& X, const std::vector<CMatrix>& F,
                   const NetworkConfig& cfg);
double total_power(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg);

/// Per-user mean of the stream SINRs, repeated for every stream of the user.
SinrTargets assign_targets(const PerStream<double>& sinrs);

PerStream<double> all_stream_sinrs(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg);
PerStream<double> all_stream_sinrs(const PrecomputedForms& forms, const PerStream<CMatrix>& X);

double sum_sinr(const PerStream<double>& sinrs);

}  // namespace relaybf
