#include "relaybf/ber.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace relaybf {

double q_function(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

double qpsk_ber_theory(double snr) {
  if (snr < 0.0) throw std::invalid_argument("qpsk_ber_theory: negative SNR");
  return q_function(std::sqrt(snr));
}

PerStream<double> ber_simulate(const NetworkConfig& cfg, const ChannelSet& ch, const BeamformerSet& bf, int symbols,
                               std::uint64_t seed) {
  cfg.validate();
  if (symbols < 1) throw std::invalid_argument("ber_simulate: symbols must be >= 1");
  const int K = cfg.K, d = cfg.d, M = cfg.M, R = cfg.R;
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution bit(0.5);
  // circular complex Gaussian with E|n|^2 = sigma^2
  std::normal_distribution<double> noise(0.0, std::sqrt(cfg.sigma_sq / 2.0));
  auto cn = [&](Eigen::Index n) {
    CVector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = cplx(noise(rng), noise(rng));
    return v;
  };

  std::vector<std::vector<CMatrix>> H(K, std::vector<CMatrix>(K));
  for (int k = 0; k < K; ++k)
    for (int i = 0; i < K; ++i) H[k][i] = aggregate_channel(ch, bf.F, k, i);
  PerStream<cplx> gain(K, std::vector<cplx>(d));
  for (int k = 0; k < K; ++k)
    for (int l = 0; l < d; ++l) gain[k][l] = bf.vbar[k][l].dot(H[k][k] * bf.u[k][l]);

  const double a = 1.0 / std::sqrt(2.0);
  PerStream<double> errors(K, std::vector<double>(d, 0.0));
  for (int t = 0; t < symbols; ++t) {
    PerStream<int> b0(K, std::vector<int>(d)), b1(K, std::vector<int>(d));
    std::vector<CVector> x(K, CVector::Zero(M));
    for (int i = 0; i < K; ++i) {
      for (int n = 0; n < d; ++n) {
        b0[i][n] = bit(rng);
        b1[i][n] = bit(rng);
        // Gray mapping: one bit per quadrature, 0 -> +, 1 -> -
        const cplx s(b0[i][n] ? -a : a, b1[i][n] ? -a : a);
        x[i] += bf.u[i][n] * s;
      }
    }
    std::vector<CVector> relay_noise(R);
    for (int r = 0; r < R; ++r) relay_noise[r] = cn(cfg.N);
    for (int k = 0; k < K; ++k) {
      CVector y(2 * M);
      y.head(M) = cn(M);
      y.tail(M) = cn(M);
      for (int i = 0; i < K; ++i) y += H[k][i] * x[i];
      for (int r = 0; r < R; ++r) y.tail(M) += ch.G[k][r] * (bf.F[r] * relay_noise[r]);
      for (int l = 0; l < d; ++l) {
        const cplx z = bf.vbar[k][l].dot(y) / gain[k][l];
        errors[k][l] += static_cast<double>((z.real() < 0.0) != static_cast<bool>(b0[k][l]));
        errors[k][l] += static_cast<double>((z.imag() < 0.0) != static_cast<bool>(b1[k][l]));
      }
    }
  }
  for (auto& row : errors)
    for (auto& e : row) e /= 2.0 * symbols;
  return errors;
}

}  // namespace relaybf
