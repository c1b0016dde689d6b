#include "relaybf/harness.hpp"

#include <chrono>
#include <cstdio>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <stdexcept>

#include "relaybf/joint_relay.hpp"

namespace relaybf {

void ExperimentSpec::validate() const {
  if (networks.empty()) throw std::invalid_argument("network grid is empty");
  if (snrs.empty()) throw std::invalid_argument("SNR grid is empty");
  if (algorithms.empty()) throw std::invalid_argument("no algorithm selected");
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
  for (int id = 0; id < config_count(); ++id) config(id).validate();
  ctrl.validate();
  adal_ctrl.validate();
}

NetworkConfig ExperimentSpec::config(int config_id) const {
  if (config_id < 0 || config_id >= config_count()) throw std::out_of_range("config id out of range");
  const auto& shape = networks[static_cast<size_t>(config_id) / snrs.size()];
  const auto& snr = snrs[static_cast<size_t>(config_id) % snrs.size()];
  NetworkConfig cfg;
  cfg.K = K;
  cfg.d = d;
  cfg.M = shape.M;
  cfg.N = shape.N;
  cfg.R = shape.R;
  cfg.snr_t_db = snr.snr_t_db;
  cfg.snr_r_db = snr.snr_r_db;
  return cfg;
}

std::uint64_t ExperimentSpec::trial_seed(int config_id, int trial) const {
  return relaybf::trial_seed(seed, config_id / static_cast<int>(snrs.size()), trial);
}

std::uint64_t trial_seed(std::uint64_t master, int shape_index, int trial) {
  return derive_seed(master, static_cast<std::uint64_t>(shape_index), static_cast<std::uint64_t>(trial));
}

TrialInstance make_trial(const NetworkConfig& cfg, std::uint64_t seed) {
  TrialInstance t;
  t.cfg = cfg;
  t.seed = seed;
  t.ch = generate_channels(cfg, derive_seed(seed, 1));
  t.bf = init_beamformers(cfg, t.ch, derive_seed(seed, 2));
  t.targets = assign_targets(all_stream_sinrs(t.bf, t.ch, cfg));
  return t;
}

TrialInstance trial_from_stored(const NetworkConfig& cfg, const StoredInstance& stored, std::uint64_t seed) {
  TrialInstance t;
  t.cfg = cfg;
  t.seed = seed;
  t.ch = stored.ch;
  t.bf = stored.bf;
  t.targets = assign_targets(all_stream_sinrs(t.bf, t.ch, cfg));
  return t;
}

namespace {

double max_rank_ratio(const PerStream<CMatrix>& X) {
  double worst = 0.0;
  for (const auto& row : X)
    for (const auto& x : row) worst = std::max(worst, rank_one_extract(x).ratio);
  return worst;
}

}  // namespace

TrialRecord run_algorithm(Algorithm algo, const TrialInstance& trial, const ExperimentSpec& spec,
                          RunOutcome* outcome) {
  const NetworkConfig& cfg = trial.cfg;
  TrialRecord rec;
  rec.M = cfg.M;
  rec.N = cfg.N;
  rec.R = cfg.R;
  rec.snr_t_db = cfg.snr_t_db;
  rec.snr_r_db = cfg.snr_r_db;
  rec.algorithm = algo;
  const int B = cfg.B();

  AlgorithmControl ctrl = algo == Algorithm::Adal ? spec.adal_ctrl : spec.ctrl;
  ctrl.seed = derive_seed(trial.seed, 3);

  const auto t0 = std::chrono::steady_clock::now();
  try {
    RunOutcome out;
    if (algo == Algorithm::Centralized) {
      const PrecomputedForms forms = precompute_forms(trial.ch, trial.bf, cfg);
      const CentralizedResult c =
          centralized_solve(forms, trial.targets, cfg, trial.bf.F, ctrl.incorporate_power_constraints);
      out.converged = c.optimal();
      out.iflag = c.status == conic::Status::Infeasible ||
                  (c.optimal() && power_budget_violated(forms, c.X, trial.bf.F, cfg));
      out.iterations = 1;
      out.X = c.X;
      out.F = trial.bf.F;
      out.total_power = c.total_power;
      if (c.optimal()) out.sinrs = all_stream_sinrs(forms, c.X);
      out.diagnostics = c.diagnostics;
    } else if (algo == Algorithm::Proposed) {
      out = admm_run(cfg, trial.ch, trial.bf, trial.targets, ctrl);
    } else if (algo == Algorithm::AdmmBg) {
      out = admm_bg_run(cfg, trial.ch, trial.bf, trial.targets, ctrl);
    } else if (algo == Algorithm::Adal) {
      out = adal_run(cfg, trial.ch, trial.bf, trial.targets, ctrl);
    } else {
      out = run_joint(cfg, trial.ch, trial.bf, trial.targets, ctrl);
    }
    rec.converged = out.converged;
    rec.iflag = out.iflag;
    rec.iterations = out.iterations;
    rec.total_power_w = out.total_power;
    rec.sum_sinr = out.sinrs.empty() ? 0.0 : sum_sinr(out.sinrs);
    rec.max_deviation = out.sinrs.empty() ? std::numeric_limits<double>::infinity()
                                          : max_sinr_deviation(out.sinrs, trial.targets);
    rec.max_rank_ratio = out.X.empty() ? 1.0 : max_rank_ratio(out.X);
    rec.message_count = out.iterations * message_load(algo, B);
    if (algo != Algorithm::Centralized && out.message_count != rec.message_count) {
      rec.diagnostics = "message count " + std::to_string(out.message_count) + " disagrees with the load formula; ";
    }
    rec.complexity_units = algo == Algorithm::Centralized ? 0 : complexity_units(algo, cfg.M, cfg.N, B, cfg.R);
    rec.diagnostics += out.diagnostics;
    if (outcome) *outcome = std::move(out);
  } catch (const std::exception& e) {
    rec.converged = false;
    rec.diagnostics = std::string("exception: ") + e.what();
  }
  rec.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

std::vector<SummaryRow> summarize(const std::vector<TrialRecord>& records) {
  std::map<std::pair<int, int>, SummaryRow> rows;
  std::map<std::pair<int, int>, std::vector<const TrialRecord*>> members;
  for (const auto& r : records) {
    const auto key = std::make_pair(r.config_id, static_cast<int>(r.algorithm));
    auto& row = rows[key];
    row.config_id = r.config_id;
    row.M = r.M;
    row.N = r.N;
    row.R = r.R;
    row.snr_t_db = r.snr_t_db;
    row.snr_r_db = r.snr_r_db;
    row.algorithm = r.algorithm;
    members[key].push_back(&r);
  }
  std::vector<SummaryRow> out;
  for (auto& [key, row] : rows) {
    const auto& list = members[key];
    row.trials = static_cast<int>(list.size());
    int bad = 0;
    double p = 0.0, s = 0.0, it = 0.0, msg = 0.0;
    for (const TrialRecord* r : list) {
      if (!r->converged || r->iflag) ++bad;
      if (!r->converged) continue;
      ++row.converged;
      p += r->total_power_w;
      s += r->sum_sinr;
      it += r->iterations;
      msg += static_cast<double>(r->message_count);
    }
    row.infeasible_rate = static_cast<double>(bad) / row.trials;
    const double n = row.converged;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    row.mean_total_power_w = n > 0 ? p / n : nan;
    row.mean_sum_sinr = n > 0 ? s / n : nan;
    row.mean_iterations = n > 0 ? it / n : nan;
    row.mean_message_count = n > 0 ? msg / n : nan;
    out.push_back(row);
  }
  return out;
}

ExperimentResult run_experiment(const ExperimentSpec& spec, std::ostream* log) {
  spec.validate();
  ChannelFile stored;
  if (!spec.channels_file.empty()) {
    if (spec.config_count() != 1) {
      throw std::invalid_argument("a channel file supplies exactly one network and SNR configuration");
    }
    stored = load_channels(spec.channels_file);
    const NetworkConfig want = spec.config(0);
    const NetworkConfig& got = stored.cfg;
    if (got.K != want.K || got.d != want.d || got.M != want.M || got.N != want.N || got.R != want.R) {
      throw ChannelFileException(ChannelFileError::DimensionMismatch,
                                 "stored dimensions differ from the requested network");
    }
    if (got.snr_t_db != want.snr_t_db || got.snr_r_db != want.snr_r_db) {
      throw std::invalid_argument("stored SNR pair differs from the requested one");
    }
    if (static_cast<int>(stored.instances.size()) < spec.trials) {
      throw std::invalid_argument("channel file holds " + std::to_string(stored.instances.size()) +
                                  " draws, fewer than the requested trials");
    }
  }

  ExperimentResult res;
  for (int id = 0; id < spec.config_count(); ++id) {
    const NetworkConfig cfg = spec.config(id);
    for (int t = 0; t < spec.trials; ++t) {
      const std::uint64_t seed =
          stored.instances.empty() ? spec.trial_seed(id, t) : trial_seed(stored.master_seed, 0, t);
      const TrialInstance trial =
          stored.instances.empty() ? make_trial(cfg, seed) : trial_from_stored(cfg, stored.instances[t], seed);
      for (Algorithm algo : spec.algorithms) {
        TrialRecord rec = run_algorithm(algo, trial, spec);
        rec.config_id = id;
        rec.trial = t;
        if (log) {
          *log << "config " << id << " trial " << t << ' ' << to_string(algo) << ": "
               << (rec.converged ? "converged" : "not converged") << ", " << rec.iterations << " iterations, "
               << watts_to_dbm(rec.total_power_w) << " dBm";
          if (!rec.diagnostics.empty()) *log << " (" << rec.diagnostics << ')';
          *log << '\n';
        }
        res.records.push_back(std::move(rec));
      }
    }
  }
  res.summary = summarize(res.records);
  return res;
}

ChannelFile generate_channel_file(const ExperimentSpec& spec) {
  spec.validate();
  if (spec.config_count() != 1) {
    throw std::invalid_argument("saving channels needs exactly one network and SNR configuration");
  }
  ChannelFile file;
  file.cfg = spec.config(0);
  file.master_seed = spec.seed;
  for (int t = 0; t < spec.trials; ++t) {
    TrialInstance trial = make_trial(file.cfg, spec.trial_seed(0, t));
    file.instances.push_back({std::move(trial.ch), std::move(trial.bf)});
  }
  return file;
}

const char* const kTrialCsvHeader =
    "config_id,M,N,R,snr_t_db,snr_r_db,trial,algorithm,converged,iflag,iterations,total_power_dbm,sum_sinr_dbm,"
    "message_count,complexity_units,wall_time_s";
const char* const kSummaryCsvHeader =
    "config_id,M,N,R,snr_t_db,snr_r_db,algorithm,trials,converged,infeasible_rate,mean_total_power_w,"
    "mean_total_power_dbm,mean_sum_sinr,mean_sum_sinr_dbm,mean_iterations,mean_message_count";

namespace {

/// Shortest round-trip decimal form, so the CSV loses no precision.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_trials_csv(std::ostream& out, const std::vector<TrialRecord>& records, bool timing) {
  out << kTrialCsvHeader << '\n';
  for (const auto& r : records) {
    out << r.config_id << ',' << r.M << ',' << r.N << ',' << r.R << ',' << num(r.snr_t_db) << ','
        << num(r.snr_r_db) << ',' << r.trial << ',' << to_string(r.algorithm) << ',' << (r.converged ? 1 : 0)
        << ',' << (r.iflag ? 1 : 0) << ',' << r.iterations << ',' << num(watts_to_dbm(r.total_power_w)) << ','
        << num(watts_to_dbm(r.sum_sinr)) << ',' << r.message_count << ',' << r.complexity_units << ','
        << num(timing ? r.wall_time_s : 0.0) << '\n';
  }
}

void write_summary_csv(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << kSummaryCsvHeader << '\n';
  for (const auto& r : rows) {
    out << r.config_id << ',' << r.M << ',' << r.N << ',' << r.R << ',' << num(r.snr_t_db) << ','
        << num(r.snr_r_db) << ',' << to_string(r.algorithm) << ',' << r.trials << ',' << r.converged << ','
        << num(r.infeasible_rate) << ',' << num(r.mean_total_power_w) << ','
        << num(watts_to_dbm(r.mean_total_power_w)) << ',' << num(r.mean_sum_sinr) << ','
        << num(watts_to_dbm(r.mean_sum_sinr)) << ',' << num(r.mean_iterations) << ','
        << num(r.mean_message_count) << '\n';
  }
}

void emit_report(const std::string& dir, const ExperimentResult& result, bool timing) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw std::runtime_error("cannot create " + dir + ": " + ec.message());
  const auto write = [&](const std::string& name, auto&& body) {
    const std::string path = (std::filesystem::path(dir) / name).string();
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + path);
    body(out);
    if (!out) throw std::runtime_error("write to " + path + " failed");
  };
  write("trials.csv", [&](std::ostream& o) { write_trials_csv(o, result.records, timing); });
  write("summary.csv", [&](std::ostream& o) { write_summary_csv(o, result.summary); });
}

}  // namespace relaybf
