#include <doctest.h>

#include "fixtures.hpp"

using namespace relaybf;
using relaybf::testing::make_instance;
using relaybf::testing::rel_err;
using relaybf::testing::small_config;

namespace {

bool bit_identical(const CMatrix& a, const CMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

/// One transmitter, one relay, identity links.
ChannelSet identity_chain(int m) {
  ChannelSet ch;
  ch.J = {{CMatrix::Identity(m, m)}};
  ch.G = {{CMatrix::Identity(m, m)}};
  ch.H2 = {{CMatrix::Identity(m, m)}};
  return ch;
}

}  // namespace

TEST_CASE("config validation") {
  NetworkConfig cfg;
  CHECK_NOTHROW(cfg.validate());
  CHECK(cfg.B() == 6);
  cfg.d = cfg.M + 1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = NetworkConfig{};
  cfg.R = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = NetworkConfig{};
  cfg.sigma_sq = 0.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("channel generation is deterministic and shaped per link") {
  NetworkConfig cfg;
  cfg.N = 8;
  const auto a = generate_channels(cfg, 7);
  const auto b = generate_channels(cfg, 7);
  const auto c = generate_channels(cfg, 8);
  for (int k = 0; k < cfg.K; ++k) {
    for (int i = 0; i < cfg.K; ++i) CHECK(bit_identical(a.J[k][i], b.J[k][i]));
    for (int r = 0; r < cfg.R; ++r) CHECK(bit_identical(a.G[k][r], b.G[k][r]));
  }
  CHECK_FALSE(bit_identical(a.J[0][0], c.J[0][0]));
  CHECK(a.H2[0][0].rows() == cfg.N);
  CHECK(a.H2[0][0].cols() == cfg.M);
  CHECK(a.G[0][0].rows() == cfg.M);
  CHECK(a.G[0][0].cols() == cfg.N);
}

TEST_CASE("entry variance matches path loss without shadowing") {
  NetworkConfig cfg = small_config(1, 1, 10, 10, 1);
  cfg.shadow_std_db = 0.0;
  double acc = 0.0;
  int count = 0;
  for (int s = 0; s < 100; ++s) {
    const auto ch = generate_channels(cfg, derive_seed(11, s));
    acc += ch.H2[0][0].squaredNorm();
    count += 100;
  }
  // 1 km hop, exponent 3: unit gain.
  CHECK(std::abs(acc / count - 1.0) < 0.03);
}

TEST_CASE("initial beamformers meet their normalizations") {
  const auto in = make_instance(NetworkConfig{}, 3);
  for (int k = 0; k < in.cfg.K; ++k) {
    for (int l = 0; l < in.cfg.d; ++l) {
      CHECK(std::abs(in.bf.u[k][l].squaredNorm() - in.cfg.p_tx_max() / in.cfg.d) < 1e-12 * in.cfg.p_tx_max());
      CHECK(std::abs(in.bf.vbar[k][l].norm() - 1.0) < 1e-12);
      CHECK(std::abs(in.bf.vbar[k][l].head(in.cfg.M).squaredNorm() - 0.5) < 1e-12);
    }
  }
  for (int r = 0; r < in.cfg.R; ++r) {
    CHECK(rel_err(relay_power(in.bf, in.ch, in.cfg, r), in.cfg.p_relay_max()) < 1e-9);
  }
}

TEST_CASE("effective and aggregate channels") {
  const auto ch = identity_chain(3);
  std::vector<CMatrix> F = {CMatrix::Identity(3, 3)};
  CHECK(effective_channel(ch, F, 0, 0).isApprox(CMatrix::Identity(3, 3)));
  std::vector<CMatrix> F0 = {CMatrix::Zero(3, 3)};
  CHECK(effective_channel(ch, F0, 0, 0).norm() == 0.0);
  const CMatrix agg = aggregate_channel(ch, F0, 0, 0);
  CHECK(agg.rows() == 6);
  CHECK(agg.topRows(3).isApprox(CMatrix::Identity(3, 3)));
  CHECK(agg.bottomRows(3).norm() == 0.0);

  const auto in = make_instance(small_config(2, 1, 3, 4, 2), 5);
  CMatrix oracle = CMatrix::Zero(3, 3);
  for (int r = 0; r < 2; ++r) oracle += in.ch.G[1][r] * in.bf.F[r] * in.ch.H2[r][0];
  CHECK((effective_channel(in.ch, in.bf.F, 1, 0) - oracle).norm() <= 1e-13 * (1 + oracle.norm()));
  const CMatrix a = aggregate_channel(in.ch, in.bf.F, 1, 0);
  CHECK(a.topRows(3) == in.ch.J[1][0]);
  CHECK((a.bottomRows(3) - oracle).norm() <= 1e-13 * (1 + oracle.norm()));
}

TEST_CASE("noise covariance") {
  NetworkConfig cfg = small_config(1, 1, 3, 3, 1);
  const auto ch = identity_chain(3);
  const HermitianMatrix rn0 = noise_covariance(ch, {CMatrix::Zero(3, 3)}, cfg, 0);
  CHECK(rn0.isApprox(CMatrix::Identity(6, 6)));
  const HermitianMatrix rn1 = noise_covariance(ch, {CMatrix::Identity(3, 3)}, cfg, 0);
  CHECK(rn1.bottomRightCorner(3, 3).isApprox(2.0 * CMatrix::Identity(3, 3)));

  const auto in = make_instance(NetworkConfig{}, 9);
  for (int k = 0; k < in.cfg.K; ++k) CHECK(min_eigenvalue(in.forms.Rn[k]) >= in.cfg.sigma_sq - 1e-10);
}

TEST_CASE("precomputed forms") {
  const auto in = make_instance(NetworkConfig{}, 13);
  for (int k = 0; k < in.cfg.K; ++k) {
    CHECK(min_eigenvalue(in.forms.Rdot[k] - CMatrix::Identity(in.cfg.M, in.cfg.M)) >= -1e-10);
    for (int l = 0; l < in.cfg.d; ++l) {
      for (int i = 0; i < in.cfg.K; ++i) {
        const auto e = hermitian_eig(in.forms.Rkl[k][l][i]);
        CHECK(e.values(1) <= 1e-12 * e.values(0));
        CHECK(e.values.minCoeff() >= -1e-10);
      }
    }
  }
  // F = 0 collapses Rdot to the identity.
  BeamformerSet bf = in.bf;
  for (auto& f : bf.F) f.setZero();
  const auto f0 = precompute_forms(in.ch, bf, in.cfg);
  CHECK(f0.Rdot[0].isApprox(CMatrix::Identity(in.cfg.M, in.cfg.M)));
}

TEST_CASE("single-term SINR ratio") {
  NetworkConfig cfg = small_config(1, 1, 1, 1, 1);
  cfg.sigma_sq = 1.0;
  ChannelSet ch;
  ch.J = {{CMatrix::Constant(1, 1, 2.0)}};
  ch.G = {{CMatrix::Constant(1, 1, 1.0)}};
  ch.H2 = {{CMatrix::Constant(1, 1, 1.0)}};
  BeamformerSet bf;
  bf.u = {{CVector::Constant(1, 1.0)}};
  bf.F = {CMatrix::Zero(1, 1)};
  CVector v(2);
  v << 1.0, 1.0;
  bf.vbar = {{v}};
  // |vbar^H H u|^2 = |2|^2 = 4, noise vbar^H I vbar = 2.
  CHECK(stream_sinr(bf, ch, cfg, 0, 0) == doctest::Approx(2.0));
  bf.u[0][0] *= std::sqrt(3.0);
  CHECK(stream_sinr(bf, ch, cfg, 0, 0) == doctest::Approx(6.0));
}

TEST_CASE("direct and quadratic SINR agree on random instances") {
  for (int s = 0; s < 30; ++s) {
    NetworkConfig cfg = small_config(1 + s % 3, 1 + s % 2, 2 + s % 9, 2 + s % 7, 1 + s % 3);
    const auto in = make_instance(cfg, 100 + s);
    const auto X = outer_products(in.bf.u);
    for (int k = 0; k < cfg.K; ++k) {
      for (int l = 0; l < cfg.d; ++l) {
        const double direct = stream_sinr(in.bf, in.ch, cfg, k, l);
        CHECK(rel_err(stream_sinr_quadratic(in.forms, in.bf.u, k, l), direct) <= 1e-10);
        CHECK(rel_err(stream_sinr_quadratic(in.forms, X, k, l), direct) <= 1e-10);
      }
    }
  }
}

TEST_CASE("power algebra") {
  NetworkConfig cfg = small_config(1, 2, 3, 3, 1);
  BeamformerSet bf;
  CVector e1 = CVector::Zero(3);
  e1(0) = 1.0;
  bf.u = {{e1, e1}};
  CHECK(transmit_power(bf, 0) == doctest::Approx(2.0));

  const auto in = make_instance(NetworkConfig{}, 17);
  double split = 0.0;
  for (int k = 0; k < in.cfg.K; ++k) split += transmit_power(in.bf, k);
  for (int r = 0; r < in.cfg.R; ++r) split += relay_power(in.bf, in.ch, in.cfg, r);
  CHECK(rel_err(total_power(in.bf, in.ch, in.cfg), split) <= 1e-10);

  BeamformerSet off = in.bf;
  for (auto& f : off.F) f.setZero();
  CHECK(relay_power(off, in.ch, in.cfg, 0) == 0.0);
  double tx = 0.0;
  for (int k = 0; k < in.cfg.K; ++k) tx += transmit_power(off, k);
  CHECK(rel_err(total_power(off, in.ch, in.cfg), tx) <= 1e-12);
}

TEST_CASE("targets are per-user SINR means") {
  const auto t = assign_targets({{2.0, 4.0}, {5.0, 5.0}});
  CHECK(t[0][0] == 3.0);
  CHECK(t[0][1] == 3.0);
  CHECK(t[1][0] == 5.0);
  CHECK(assign_targets({{0.7}})[0][0] == 0.7);
  CHECK_THROWS_AS(assign_targets({{1.0, 0.0}}), std::invalid_argument);
}
