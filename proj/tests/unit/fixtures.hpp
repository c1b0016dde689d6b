#pragma once

#include <cstdint>

#include "relaybf/network.hpp"

namespace relaybf::testing {

struct Instance {
  NetworkConfig cfg;
  ChannelSet ch;
  BeamformerSet bf;
  PrecomputedForms forms;
  SinrTargets targets;
};

/// Random instance with targets from the initial beamformers.
inline Instance make_instance(const NetworkConfig& cfg, std::uint64_t seed) {
  Instance in;
  in.cfg = cfg;
  in.ch = generate_channels(cfg, derive_seed(seed, 1));
  in.bf = init_beamformers(cfg, in.ch, derive_seed(seed, 2));
  in.forms = precompute_forms(in.ch, in.bf, cfg);
  in.targets = assign_targets(all_stream_sinrs(in.bf, in.ch, cfg));
  return in;
}

inline NetworkConfig small_config(int K = 2, int d = 1, int M = 3, int N = 3, int R = 2) {
  NetworkConfig cfg;
  cfg.K = K;
  cfg.d = d;
  cfg.M = M;
  cfg.N = N;
  cfg.R = R;
  return cfg;
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1e-300, std::abs(b)); }

}  // namespace relaybf::testing
