#include "relaybf/targets.hpp"

#include <cmath>
#include <stdexcept>

namespace relaybf {

HermitianMatrix downlink_covariance(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k,
                                    int l) {
  const int d = static_cast<int>(bf.u[k].size());
  HermitianMatrix q = noise_covariance(ch, bf.F, cfg, k) / static_cast<double>(d);
  for (int j = 0; j < ch.K(); ++j) {
    const CMatrix H = aggregate_channel(ch, bf.F, k, j);
    for (size_t m = 0; m < bf.u[j].size(); ++m) {
      if (j == k && static_cast<int>(m) == l) continue;
      const CVector y = H * bf.u[j][m];
      q += y * y.adjoint();
    }
  }
  return hermitize(q);
}

CVector downlink_filter(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg, int k, int l) {
  const HermitianMatrix q = downlink_covariance(ch, bf, cfg, k, l);
  const CVector s = aggregate_channel(ch, bf.F, k, k) * bf.u[k][l];
  return q.llt().solve(s) / q.norm();
}

ChannelSet reverse_channels(const ChannelSet& ch) {
  const int K = ch.K();
  const int R = ch.R();
  ChannelSet rev;
  rev.J.assign(K, std::vector<CMatrix>(K));
  rev.G.assign(K, std::vector<CMatrix>(R));
  rev.H2.assign(R, std::vector<CMatrix>(K));
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < K; ++i) rev.J[k][i] = ch.J[i][k].adjoint();
    for (int r = 0; r < R; ++r) {
      rev.G[k][r] = ch.H2[r][k].adjoint();
      rev.H2[r][k] = ch.G[k][r].adjoint();
    }
  }
  return rev;
}

std::vector<CMatrix> reverse_filters(const std::vector<CMatrix>& F) {
  std::vector<CMatrix> out;
  out.reserve(F.size());
  for (const auto& f : F) out.push_back(f.adjoint());
  return out;
}

CMatrix reverse_stacked_channel(const ReverseLink& link, int k, int j) {
  const CMatrix& J = link.rev.J[k][j];
  CMatrix out(J.rows(), 2 * J.cols());
  out.leftCols(J.cols()) = J;
  out.rightCols(J.cols()) = effective_channel(link.rev, link.Frev, k, j);
  return out;
}

HermitianMatrix uplink_covariance(const ReverseLink& link, const NetworkConfig& cfg, int k, int l) {
  const Eigen::Index M = link.rev.J[k][k].rows();
  const int d = static_cast<int>(link.u[k].size());
  CMatrix noise = 2.0 * cfg.sigma_sq * CMatrix::Identity(M, M);
  for (int r = 0; r < link.rev.R(); ++r) {
    const CMatrix hf = link.rev.G[k][r] * link.Frev[r];
    noise += cfg.sigma_sq * hf * hf.adjoint();
  }
  HermitianMatrix q = noise / static_cast<double>(d);
  for (int j = 0; j < link.rev.K(); ++j) {
    const CMatrix A = reverse_stacked_channel(link, k, j);
    for (size_t m = 0; m < link.u[j].size(); ++m) {
      if (j == k && static_cast<int>(m) == l) continue;
      const CVector y = A * link.u[j][m];
      q += y * y.adjoint();
    }
  }
  return hermitize(q);
}

CVector uplink_filter(const ReverseLink& link, const NetworkConfig& cfg, int k, int l) {
  const HermitianMatrix q = uplink_covariance(link, cfg, k, l);
  const CVector s = reverse_stacked_channel(link, k, k) * link.u[k][l];
  const CVector v = q.llt().solve(s) / q.norm();
  const double scale = std::sqrt(cfg.p_tx_max() / static_cast<double>(link.u[k].size()));
  return scale * v / v.norm();
}

MaxSinrResult max_sinr_targets(const NetworkConfig& cfg, const ChannelSet& ch, const std::vector<CMatrix>& F,
                               std::uint64_t seed, int max_alt, double tol) {
  cfg.validate();
  if (max_alt < 0) throw std::invalid_argument("max_alt must be >= 0");
  MaxSinrResult out;
  out.bf = init_beamformers(cfg, ch, seed);
  out.bf.F = F;
  auto sinrs = all_stream_sinrs(out.bf, ch, cfg);
  out.sum_sinr_trace.push_back(sum_sinr(sinrs));

  ReverseLink link{reverse_channels(ch), reverse_filters(F), {}};
  for (int a = 0; a < max_alt; ++a) {
    // Forward pass: each receiver adapts to the current transmit vectors.
    PerStream<CVector> v(cfg.K);
    for (int k = 0; k < cfg.K; ++k)
      for (int l = 0; l < cfg.d; ++l) v[k].push_back(downlink_filter(ch, out.bf, cfg, k, l));
    out.bf.vbar = v;

    // Reverse pass: the receive vectors transmit back over the reversed network.
    link.u = v;
    PerStream<CVector> u(cfg.K);
    for (int k = 0; k < cfg.K; ++k)
      for (int l = 0; l < cfg.d; ++l) u[k].push_back(uplink_filter(link, cfg, k, l));
    out.bf.u = std::move(u);

    // The forward receivers are refreshed so the reported SINR belongs to the
    // new transmit vectors.
    for (int k = 0; k < cfg.K; ++k)
      for (int l = 0; l < cfg.d; ++l) out.bf.vbar[k][l] = downlink_filter(ch, out.bf, cfg, k, l);

    sinrs = all_stream_sinrs(out.bf, ch, cfg);
    out.sum_sinr_trace.push_back(sum_sinr(sinrs));
    out.alternations = a + 1;
    if (std::abs(out.sum_sinr_trace.back() - out.sum_sinr_trace[a]) < tol) {
      out.converged = true;
      break;
    }
  }
  if (max_alt == 0) out.converged = true;
  out.targets = assign_targets(sinrs);
  return out;
}

SinrTargets interpolate_targets(const SinrTargets& lo, const SinrTargets& hi, double w) {
  if (lo.size() != hi.size()) throw std::invalid_argument("target sets differ in shape");
  SinrTargets out = lo;
  for (size_t k = 0; k < lo.size(); ++k) {
    if (lo[k].size() != hi[k].size()) throw std::invalid_argument("target sets differ in shape");
    for (size_t l = 0; l < lo[k].size(); ++l) out[k][l] = lo[k][l] + w * (hi[k][l] - lo[k][l]);
  }
  return out;
}

TargetSearchResult linear_target_search(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf,
                                        const SinrTargets& lo, const SinrTargets& hi, int budget,
                                        const AlgorithmControl& ctrl) {
  if (budget < 1) throw std::invalid_argument("linear_target_search: budget must be >= 1");
  for (size_t k = 0; k < lo.size(); ++k)
    for (size_t l = 0; l < lo[k].size(); ++l)
      if (lo.at(k).at(l) > hi.at(k).at(l)) throw std::invalid_argument("lower targets exceed upper targets");

  TargetSearchResult res;
  auto probe = [&](double w) {
    const SinrTargets t = interpolate_targets(lo, hi, w);
    const RunOutcome run = admm_run(cfg, ch, bf, t, ctrl);
    const bool ok = run.converged && !run.iflag && !run.aborted;
    res.probes.push_back({w, ok, run.total_power, run.iterations});
    if (ok) {
      res.targets = t;
      res.w = w;
      res.total_power = run.total_power;
      res.sinrs = run.sinrs;
    }
    return ok;
  };

  if (!probe(0.0)) throw std::invalid_argument("linear_target_search: the lower targets are not feasible");
  double a = 0.0, b = 1.0;
  for (int i = 0; i < budget; ++i) {
    const double w = 0.5 * (a + b);
    if (probe(w)) {
      a = w;
      res.feasible = true;
    } else {
      b = w;
    }
  }
  return res;
}

}  // namespace relaybf
