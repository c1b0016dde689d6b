#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "relaybf/baselines.hpp"
#include "relaybf/channel_io.hpp"

namespace relaybf {

struct NetworkShape {
  int M = 10;
  int N = 8;
  int R = 3;
};

struct SnrPoint {
  double snr_t_db = 12.0;
  double snr_r_db = 12.0;
};

struct ExperimentSpec {
  int K = 3;
  int d = 2;
  std::vector<NetworkShape> networks{NetworkShape{}};
  std::vector<SnrPoint> snrs{SnrPoint{}};
  std::vector<Algorithm> algorithms{Algorithm::Proposed};
  int trials = 1;
  std::uint64_t seed = 1;
  /// When set, trials come from this file instead of fresh draws.
  std::string channels_file;
  AlgorithmControl ctrl;
  AlgorithmControl adal_ctrl = adal_defaults();

  /// Throws std::invalid_argument on an empty grid, trials < 1 or an invalid
  /// network.
  void validate() const;
  int config_count() const { return static_cast<int>(networks.size() * snrs.size()); }
  /// Network shapes vary slowest: id = shape index * snrs.size() + snr index.
  NetworkConfig config(int config_id) const;
  /// Seed of one trial. It depends on the network shape but not on the SNR
  /// point, so an SNR sweep reuses the same channel draws.
  std::uint64_t trial_seed(int config_id, int trial) const;
};

/// Everything the algorithms of one trial consume.
struct TrialInstance {
  NetworkConfig cfg;
  ChannelSet ch;
  BeamformerSet bf;
  SinrTargets targets;
  std::uint64_t seed = 0;  ///< per-trial seed, also seeds the random multipliers
};

std::uint64_t trial_seed(std::uint64_t master, int shape_index, int trial);
/// Channels from derive_seed(seed, 1), filters from derive_seed(seed, 2),
/// targets from the initial filters.
TrialInstance make_trial(const NetworkConfig& cfg, std::uint64_t seed);
TrialInstance trial_from_stored(const NetworkConfig& cfg, const StoredInstance& stored, std::uint64_t seed);

struct TrialRecord {
  int config_id = 0;
  int M = 0, N = 0, R = 0;
  double snr_t_db = 0.0, snr_r_db = 0.0;
  int trial = 0;
  Algorithm algorithm = Algorithm::Proposed;
  bool converged = false;
  bool iflag = false;
  int iterations = 0;
  double total_power_w = 0.0;
  double sum_sinr = 0.0;  ///< linear
  std::int64_t message_count = 0;
  std::int64_t complexity_units = 0;
  double wall_time_s = 0.0;
  /// Largest lambda_2 / lambda_1 over the transmit covariances.
  double max_rank_ratio = 0.0;
  double max_deviation = 0.0;
  std::string diagnostics;
};

/// Runs one algorithm on one trial. Failures are caught and reported in the
/// record, never thrown.
TrialRecord run_algorithm(Algorithm algo, const TrialInstance& trial, const ExperimentSpec& spec,
                          RunOutcome* outcome = nullptr);

struct SummaryRow {
  int config_id = 0;
  int M = 0, N = 0, R = 0;
  double snr_t_db = 0.0, snr_r_db = 0.0;
  Algorithm algorithm = Algorithm::Proposed;
  int trials = 0;
  int converged = 0;
  /// Share of trials that did not converge or violated a budget.
  double infeasible_rate = 0.0;
  /// Means over converged trials; NaN when none converged.
  double mean_total_power_w = 0.0;
  double mean_sum_sinr = 0.0;
  double mean_iterations = 0.0;
  double mean_message_count = 0.0;
};

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records);

struct ExperimentResult {
  std::vector<TrialRecord> records;
  std::vector<SummaryRow> summary;
};

/// Every selected algorithm sees the same instance within a trial. `log`,
/// when given, receives one progress line per trial.
ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* log = nullptr);

/// Stored draws for the single configuration of `spec`, regenerated from the
/// same per-trial seeds run_experiment uses.
ChannelFile generate_channel_file(const ExperimentSpec& spec);

extern const char* const kTrialCsvHeader;
extern const char* const kSummaryCsvHeader;

/// With `timing` off the wall-time column is written as 0 so that equal
/// specs give byte-identical files.
void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, bool timing = true);
void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows);
/// Writes trials.csv and summary.csv into `dir`, creating it when needed.
/// Throws std::runtime_error on IO failure.
void emit_report(const std::string& dir, const ExperimentResult& result, bool timing = true);

}  // namespace relaybf
