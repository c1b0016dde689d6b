#pragma once

#include <cstdint>

#include "relaybf/network.hpp"

namespace relaybf {

/// Tail probability of the standard normal distribution.
double q_function(double x);

/// Bit error rate of Gray-coded QPSK on an AWGN channel at symbol SNR
/// `snr`: Q(sqrt(snr)).
double qpsk_ber_theory(double snr);

/// Uncoded Gray-mapped QPSK through the two-slot relay model. Every stream
/// sends `symbols` unit-energy symbols scaled by its transmit vector; the
/// receiver applies vbar^H, divides by the effective gain vbar^H H_kk u_kl
/// and decides each quadrature by sign. Returns bit errors / (2 symbols) per
/// stream.
PerStream<double> ber_simulate(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf, int symbols,
                               std::uint64_t seed);

}  // namespace relaybf
