#include "relaybf/network.hpp"

#include <random>
#include <stdexcept>
#include <string>

namespace relaybf {

namespace {

CMatrix complex_gaussian(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  // CN(0,1): real and imaginary parts each with variance 1/2.
  std::normal_distribution<double> g(0.0, std::sqrt(0.5));
  CMatrix a(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) a(i, j) = cplx(g(rng), g(rng));
  return a;
}

double link_gain(double dist_km, const NetworkConfig& cfg, std::mt19937_64& rng) {
  double gain = std::pow(dist_km, -cfg.pathloss_exponent);
  if (cfg.shadow_std_db > 0.0) {
    std::normal_distribution<double> s(0.0, cfg.shadow_std_db);
    gain *= from_db(s(rng));
  }
  return gain;
}

}  // namespace

void NetworkConfig::validate() const {
  if (K < 1 || d < 1 || M < 1 || N < 1 || R < 1) {
    throw std::invalid_argument("network dimensions K, d, M, N, R must all be >= 1");
  }
  if (d > M) {
    throw std::invalid_argument("streams per user d=" + std::to_string(d) + " exceeds antennas M=" +
                                std::to_string(M));
  }
  if (!(sigma_sq > 0.0)) {
    throw std::invalid_argument("noise power must be positive");
  }
  if (!(tx_relay_dist_km > 0.0) || !(relay_rx_dist_km > 0.0)) {
    throw std::invalid_argument("link distances must be positive");
  }
  if (shadow_std_db < 0.0) {
    throw std::invalid_argument("shadowing standard deviation must be >= 0");
  }
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(master) ^ a) ^ b);
}

ChannelSet generate_channels(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  const double direct_km = cfg.tx_relay_dist_km + cfg.relay_rx_dist_km;
  ChannelSet ch;
  ch.J.assign(cfg.K, std::vector<CMatrix>(cfg.K));
  ch.G.assign(cfg.K, std::vector<CMatrix>(cfg.R));
  ch.H2.assign(cfg.R, std::vector<CMatrix>(cfg.K));
  for (int k = 0; k < cfg.K; ++k) {
    for (int i = 0; i < cfg.K; ++i) {
      const double g = link_gain(direct_km, cfg, rng);
      ch.J[k][i] = std::sqrt(g) * complex_gaussian(cfg.M, cfg.M, rng);
    }
  }
  for (int k = 0; k < cfg.K; ++k) {
    for (int r = 0; r < cfg.R; ++r) {
      const double g = link_gain(cfg.relay_rx_dist_km, cfg, rng);
      ch.G[k][r] = std::sqrt(g) * complex_gaussian(cfg.M, cfg.N, rng);
    }
  }
  for (int r = 0; r < cfg.R; ++r) {
    for (int i = 0; i < cfg.K; ++i) {
      const double g = link_gain(cfg.tx_relay_dist_km, cfg, rng);
      ch.H2[r][i] = std::sqrt(g) * complex_gaussian(cfg.N, cfg.M, rng);
    }
  }
  return ch;
}

BeamformerSet init_beamformers(const NetworkConfig& cfg, const ChannelSet& ch, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  BeamformerSet bf;
  const double stream_power = cfg.p_tx_max() / cfg.d;
  bf.u.assign(cfg.K, std::vector<CVector>(cfg.d));
  for (int k = 0; k < cfg.K; ++k) {
    for (int l = 0; l < cfg.d; ++l) {
      CVector u = complex_gaussian(cfg.M, 1, rng);
      bf.u[k][l] = u * std::sqrt(stream_power / u.squaredNorm());
    }
  }
  bf.F.resize(cfg.R);
  for (int r = 0; r < cfg.R; ++r) bf.F[r] = complex_gaussian(cfg.N, cfg.N, rng);
  for (int r = 0; r < cfg.R; ++r) {
    const double p = relay_power(bf, ch, cfg, r);
    bf.F[r] *= std::sqrt(cfg.p_relay_max() / p);
  }
  bf.vbar.assign(cfg.K, std::vector<CVector>(cfg.d));
  for (int k = 0; k < cfg.K; ++k) {
    for (int l = 0; l < cfg.d; ++l) {
      CVector v1 = complex_gaussian(cfg.M, 1, rng);
      CVector v2 = complex_gaussian(cfg.M, 1, rng);
      CVector v(2 * cfg.M);
      v << v1 * std::sqrt(0.5 / v1.squaredNorm()), v2 * std::sqrt(0.5 / v2.squaredNorm());
      bf.vbar[k][l] = v;
    }
  }
  return bf;
}

CMatrix effective_channel(const ChannelSet& ch, const std::vector<CMatrix>& F, int k, int i) {
  CMatrix h = CMatrix::Zero(ch.G[k][0].rows(), ch.H2[0][i].cols());
  for (int r = 0; r < ch.R(); ++r) h += ch.G[k][r] * F[r] * ch.H2[r][i];
  return h;
}

CMatrix aggregate_channel(const ChannelSet& ch, const std::vector<CMatrix>& F, int k, int i) {
  const CMatrix& j = ch.J[k][i];
  CMatrix h(2 * j.rows(), j.cols());
  h << j, effective_channel(ch, F, k, i);
  return h;
}

HermitianMatrix noise_covariance(const ChannelSet& ch, const std::vector<CMatrix>& F, const NetworkConfig& cfg,
                                 int k) {
  const Eigen::Index m = ch.J[k][k].rows();
  HermitianMatrix rn = HermitianMatrix::Zero(2 * m, 2 * m);
  rn.topLeftCorner(m, m) = cfg.sigma_sq * CMatrix::Identity(m, m);
  CMatrix lower = cfg.sigma_sq * CMatrix::Identity(m, m);
  for (int r = 0; r < ch.R(); ++r) {
    const CMatrix gf = ch.G[k][r] * F[r];
    lower += cfg.sigma_sq * gf * gf.adjoint();
  }
  rn.bottomRightCorner(m, m) = hermitize(lower);
  return rn;
}

PrecomputedForms precompute_forms(const ChannelSet& ch, const BeamformerSet& bf, const NetworkConfig& cfg) {
  const int K = ch.K();
  const int R = ch.R();
  PrecomputedForms f;
  f.Rrk.assign(R, std::vector<HermitianMatrix>(K));
  for (int r = 0; r < R; ++r) {
    for (int k = 0; k < K; ++k) {
      const CMatrix fh = bf.F[r] * ch.H2[r][k];
      f.Rrk[r][k] = hermitize(fh.adjoint() * fh);
    }
  }
  f.Rdot.resize(K);
  for (int k = 0; k < K; ++k) {
    const Eigen::Index m = ch.J[k][k].cols();
    f.Rdot[k] = CMatrix::Identity(m, m);
    for (int r = 0; r < R; ++r) f.Rdot[k] += f.Rrk[r][k];
  }
  std::vector<std::vector<CMatrix>> H(K, std::vector<CMatrix>(K));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) H[k][i] = aggregate_channel(ch, bf.F, k, i);
  f.Rn.resize(K);
  for (int k = 0; k < K; ++k) f.Rn[k] = noise_covariance(ch, bf.F, cfg, k);
  f.Rkl.assign(K, {});
  f.sigma_n.assign(K, {});
  for (int k = 0; k < K; ++k) {
    const int dk = static_cast<int>(bf.vbar[k].size());
    f.Rkl[k].assign(dk, std::vector<HermitianMatrix>(K));
    f.sigma_n[k].assign(dk, 0.0);
    for (int l = 0; l < dk; ++l) {
      const CVector& v = bf.vbar[k][l];
      for (int i = 0; i < K; ++i) {
        const CVector h = H[k][i].adjoint() * v;  // H_ki^H vbar
        f.Rkl[k][l][i] = h * h.adjoint();
      }
      f.sigma_n[k][l] = (v.adjoint() * f.Rn[k] * v)(0, 0).real();
    }
  }
  return f;
}

double stream_sinr(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg, int k, int l) {
  const CVector& v = bf.vbar[k][l];
  double signal = 0.0;
  double interference = 0.0;
  for (int i = 0; i < ch.K(); ++i) {
    const CMatrix h = aggregate_channel(ch, bf.F, k, i);
    const CVector vh = h.adjoint() * v;
    for (size_t n = 0; n < bf.u[i].size(); ++n) {
      const double z = std::norm(vh.dot(bf.u[i][n]));  // |vbar^H H u|^2
      if (i == k && static_cast<int>(n) == l) {
        signal = z;
      } else {
        interference += z;
      }
    }
  }
  const double noise = (v.adjoint() * noise_covariance(ch, bf.F, cfg, k) * v)(0, 0).real();
  return signal / (interference + noise);
}

double stream_sinr_quadratic(const PrecomputedForms& forms, const PerStream<CMatrix>& X, int k, int l) {
  const auto& R = forms.Rkl[k][l];
  double signal = 0.0;
  double interference = 0.0;
  for (size_t j = 0; j < X.size(); ++j) {
    for (size_t m = 0; m < X[j].size(); ++m) {
      const double t = real_trace_product(X[j][m], R[j]);
      if (static_cast<int>(j) == k && static_cast<int>(m) == l) {
        signal = t;
      } else {
        interference += t;
      }
    }
  }
  return signal / (interference + forms.sigma_n[k][l]);
}

double stream_sinr_quadratic(const PrecomputedForms& forms, const PerStream<CVector>& u, int k, int l) {
  const auto& R = forms.Rkl[k][l];
  double signal = 0.0;
  double interference = 0.0;
  for (size_t j = 0; j < u.size(); ++j) {
    for (size_t m = 0; m < u[j].size(); ++m) {
      const double t = u[j][m].dot(R[j] * u[j][m]).real();
      if (static_cast<int>(j) == k && static_cast<int>(m) == l) {
        signal = t;
      } else {
        interference += t;
      }
    }
  }
  return signal / (interference + forms.sigma_n[k][l]);
}

PerStream<CMatrix> outer_products(const PerStream<CVector>& u) {
  PerStream<CMatrix> X(u.size());
  for (size_t k = 0; k < u.size(); ++k) {
    X[k].resize(u[k].size());
    for (size_t l = 0; l < u[k].size(); ++l) X[k][l] = u[k][l] * u[k][l].adjoint();
  }
  return X;
}

double transmit_power(const BeamformerSet& bf, int k) {
  double p = 0.0;
  for (const auto& u : bf.u[k]) p += u.squaredNorm();
  return p;
}

double relay_noise_power(const std::vector<CMatrix>& F, const NetworkConfig& cfg, int r) {
  return cfg.sigma_sq * F[r].squaredNorm();
}

double relay_power(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg, int r) {
  double p = relay_noise_power(bf.F, cfg, r);
  for (int i = 0; i < ch.K(); ++i) {
    const CMatrix fh = bf.F[r] * ch.H2[r][i];
    for (const auto& u : bf.u[i]) p += (fh * u).squaredNorm();
  }
  return p;
}

double stream_power_objective(const PrecomputedForms& forms, const PerStream<CMatrix>& X) {
  double p = 0.0;
  for (size_t k = 0; k < X.size(); ++k)
    for (const auto& x : X[k]) p += real_trace_product(x, forms.Rdot[k]);
  return p;
}

double total_power(const PrecomputedForms& forms, const PerStream<CMatrix>& X, const std::vector<CMatrix>& F,
                   const NetworkConfig& cfg) {
  double p = stream_power_objective(forms, X);
  for (size_t r = 0; r < F.size(); ++r) p += relay_noise_power(F, cfg, static_cast<int>(r));
  return p;
}

double total_power(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg) {
  return total_power(precompute_forms(ch, bf, cfg), outer_products(bf.u), bf.F, cfg);
}

SinrTargets assign_targets(const PerStream<double>& sinrs) {
  SinrTargets t(sinrs.size());
  for (size_t k = 0; k < sinrs.size(); ++k) {
    double mean = 0.0;
    for (double s : sinrs[k]) {
      if (!(s > 0.0)) throw std::invalid_argument("assign_targets: SINRs must be positive");
      mean += s;
    }
    mean /= static_cast<double>(sinrs[k].size());
    t[k].assign(sinrs[k].size(), mean);
  }
  return t;
}

PerStream<double> all_stream_sinrs(const BeamformerSet& bf, const ChannelSet& ch, const NetworkConfig& cfg) {
  PerStream<double> s(bf.u.size());
  for (size_t k = 0; k < bf.u.size(); ++k) {
    s[k].resize(bf.u[k].size());
    for (size_t l = 0; l < bf.u[k].size(); ++l)
      s[k][l] = stream_sinr(bf, ch, cfg, static_cast<int>(k), static_cast<int>(l));
  }
  return s;
}

PerStream<double> all_stream_sinrs(const PrecomputedForms& forms, const PerStream<CMatrix>& X) {
  PerStream<double> s(X.size());
  for (size_t k = 0; k < X.size(); ++k) {
    s[k].resize(X[k].size());
    for (size_t l = 0; l < X[k].size(); ++l)
      s[k][l] = stream_sinr_quadratic(forms, X, static_cast<int>(k), static_cast<int>(l));
  }
  return s;
}

double sum_sinr(const PerStream<double>& sinrs) {
  double s = 0.0;
  for (const auto& row : sinrs)
    for (double v : row) s += v;
  return s;
}

}  // namespace relaybf
