#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "fixtures.hpp"
#include "relaybf/ber.hpp"
#include "relaybf/harness.hpp"

using namespace relaybf;
using relaybf::testing::small_config;

namespace {

bool same(const CMatrix& a, const CMatrix& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && (a.array() == b.array()).all();
}

ExperimentSpec small_spec(int trials) {
  ExperimentSpec spec;
  spec.K = 2;
  spec.d = 1;
  spec.networks = {{3, 3, 2}};
  spec.trials = trials;
  spec.seed = 77;
  return spec;
}

ChannelFileError decode_error(const std::vector<std::uint8_t>& bytes) {
  try {
    decode_channels(bytes);
  } catch (const ChannelFileException& e) {
    return e.code();
  }
  FAIL("decoding succeeded");
  return ChannelFileError::Io;
}

/// One transmit and one receive antenna, no relay path.
struct ScalarLink {
  NetworkConfig cfg = small_config(1, 1, 1, 1, 1);
  ChannelSet ch;
  BeamformerSet bf;

  explicit ScalarLink(double snr) {
    cfg.sigma_sq = 1.0 / snr;
    ch.J = {{CMatrix::Constant(1, 1, 1.0)}};
    ch.G = {{CMatrix::Zero(1, 1)}};
    ch.H2 = {{CMatrix::Zero(1, 1)}};
    bf.u = {{CVector::Constant(1, 1.0)}};
    bf.F = {CMatrix::Zero(1, 1)};
    CVector v = CVector::Zero(2);
    v(0) = 1.0;
    bf.vbar = {{v}};
  }
};

}  // namespace

TEST_CASE("channel file round trip is bit-identical and matches regeneration") {
  const ExperimentSpec spec = small_spec(3);
  const ChannelFile file = generate_channel_file(spec);
  const std::string path = (std::filesystem::temp_directory_path() / "relaybf_roundtrip.rnac").string();
  save_channels(path, file);
  const ChannelFile back = load_channels(path);
  std::filesystem::remove(path);

  CHECK(back.master_seed == 77);
  CHECK(back.cfg.K == 2);
  CHECK(back.cfg.R == 2);
  CHECK(back.cfg.snr_t_db == 12.0);
  REQUIRE(back.instances.size() == 3);
  for (int t = 0; t < 3; ++t) {
    const auto& a = file.instances[t];
    const auto& b = back.instances[t];
    const TrialInstance regen = make_trial(spec.config(0), trial_seed(77, 0, t));
    for (int k = 0; k < 2; ++k) {
      for (int i = 0; i < 2; ++i) {
        CHECK(same(a.ch.J[k][i], b.ch.J[k][i]));
        CHECK(same(regen.ch.J[k][i], b.ch.J[k][i]));
      }
      for (int r = 0; r < 2; ++r) {
        CHECK(same(a.ch.G[k][r], b.ch.G[k][r]));
        CHECK(same(a.ch.H2[r][k], b.ch.H2[r][k]));
      }
      CHECK(same(a.bf.u[k][0], b.bf.u[k][0]));
      CHECK(same(regen.bf.vbar[k][0], b.bf.vbar[k][0]));
    }
    for (int r = 0; r < 2; ++r) CHECK(same(a.bf.F[r], b.bf.F[r]));
  }
}

TEST_CASE("channel file errors are distinguished") {
  const auto bytes = encode_channels(generate_channel_file(small_spec(1)));

  auto bad = bytes;
  bad[0] = 'X';
  CHECK(decode_error(bad) == ChannelFileError::BadMagic);

  bad = bytes;
  bad[4] = 9;
  CHECK(decode_error(bad) == ChannelFileError::UnsupportedVersion);

  bad.assign(bytes.begin(), bytes.end() - 5);
  CHECK(decode_error(bad) == ChannelFileError::Truncated);
  bad.assign(bytes.begin(), bytes.begin() + 10);
  CHECK(decode_error(bad) == ChannelFileError::Truncated);

  bad = bytes;
  bad.push_back(0);
  CHECK(decode_error(bad) == ChannelFileError::DimensionMismatch);

  bad = bytes;
  bad[6] = bad[7] = bad[8] = bad[9] = 0;  // K = 0
  CHECK(decode_error(bad) == ChannelFileError::DimensionMismatch);

  CHECK_THROWS_AS(load_channels("/nonexistent/dir/file.rnac"), ChannelFileException);
}

TEST_CASE("experiment against a channel file of other dimensions is rejected") {
  const std::string path = (std::filesystem::temp_directory_path() / "relaybf_dims.rnac").string();
  save_channels(path, generate_channel_file(small_spec(2)));
  ExperimentSpec spec = small_spec(2);
  spec.channels_file = path;
  spec.networks = {{4, 3, 2}};
  try {
    run_experiment(spec);
    FAIL("no exception");
  } catch (const ChannelFileException& e) {
    CHECK(e.code() == ChannelFileError::DimensionMismatch);
  }
  spec.networks = {{3, 3, 2}};
  spec.trials = 3;
  CHECK_THROWS_AS(run_experiment(spec), std::invalid_argument);

  // The stored draws reproduce the generated run exactly.
  spec.trials = 2;
  const auto from_file = run_experiment(spec);
  spec.channels_file.clear();
  const auto fresh = run_experiment(spec);
  std::ostringstream a, b;
  write_trials_csv(a, from_file.records, false);
  write_trials_csv(b, fresh.records, false);
  CHECK(a.str() == b.str());
  std::filesystem::remove(path);
}

TEST_CASE("experiment output is deterministic and consistent") {
  ExperimentSpec spec = small_spec(2);
  spec.algorithms = {Algorithm::Proposed, Algorithm::Centralized};
  const auto r1 = run_experiment(spec);
  const auto r2 = run_experiment(spec);
  std::ostringstream a, b;
  write_trials_csv(a, r1.records, false);
  write_trials_csv(b, r2.records, false);
  CHECK(a.str() == b.str());

  std::istringstream lines(a.str());
  std::string header;
  std::getline(lines, header);
  CHECK(header ==
        "config_id,M,N,R,snr_t_db,snr_r_db,trial,algorithm,converged,iflag,iterations,total_power_dbm,"
        "sum_sinr_dbm,message_count,complexity_units,wall_time_s");

  REQUIRE(r1.records.size() == 4);
  for (const auto& rec : r1.records) {
    CHECK(rec.message_count == rec.iterations * message_load(rec.algorithm, 2));
    if (rec.converged) CHECK(rec.max_deviation <= spec.ctrl.delta_max + 1e-9);
  }

  // summary means against a recomputation from the rows
  REQUIRE(r1.summary.size() == 2);
  for (const auto& row : r1.summary) {
    double p = 0.0;
    int n = 0;
    for (const auto& rec : r1.records) {
      if (rec.algorithm == row.algorithm && rec.converged) {
        p += rec.total_power_w;
        ++n;
      }
    }
    CHECK(row.converged == n);
    if (n > 0) CHECK(row.mean_total_power_w == doctest::Approx(p / n).epsilon(1e-14));
  }
}

TEST_CASE("report files") {
  const auto res = run_experiment(small_spec(1));
  const auto dir = std::filesystem::temp_directory_path() / "relaybf_report";
  emit_report(dir.string(), res, false);
  std::ifstream summary(dir / "summary.csv");
  std::string header;
  std::getline(summary, header);
  CHECK(header == kSummaryCsvHeader);
  CHECK(std::filesystem::exists(dir / "trials.csv"));
  std::filesystem::remove_all(dir);
  CHECK(watts_to_dbm(1.0) == doctest::Approx(30.0));
}

TEST_CASE("spec validation") {
  ExperimentSpec spec = small_spec(0);
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec(1);
  spec.snrs.clear();
  CHECK_THROWS_AS(spec.validate(), std::invalid_argument);
  spec = small_spec(1);
  spec.networks = {{3, 3, 2}, {4, 3, 1}};
  spec.snrs = {{10, 10}, {20, 20}};
  CHECK(spec.config_count() == 4);
  CHECK(spec.config(3).M == 4);
  CHECK(spec.config(3).snr_t_db == 20.0);
  CHECK_THROWS_AS(generate_channel_file(spec), std::invalid_argument);
}

TEST_CASE("noiseless link makes no bit errors") {
  NetworkConfig cfg = small_config(1, 1, 3, 3, 1);
  const auto ch = generate_channels(cfg, 5);
  const auto bf = init_beamformers(cfg, ch, 6);
  cfg.sigma_sq = 1e-12;
  const auto ber = ber_simulate(cfg, ch, bf, 2000, 7);
  CHECK(ber[0][0] == 0.0);
}

TEST_CASE("scalar QPSK link matches the Q-function") {
  for (double snr_db : {0.0, 4.0, 7.0}) {
    const double snr = from_db(snr_db);
    const ScalarLink link(snr);
    const int symbols = 100000;
    const double p = qpsk_ber_theory(snr);
    const double sd = std::sqrt(p * (1 - p) / (2.0 * symbols));
    const double got = ber_simulate(link.cfg, link.ch, link.bf, symbols, 11)[0][0];
    CHECK(std::abs(got - p) <= 3.0 * sd);
  }
  CHECK(q_function(0.0) == doctest::Approx(0.5));
}
