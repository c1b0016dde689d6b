// relaybf: run beamforming sweeps, store channel draws, simulate BER and
// search SINR targets from the command line.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "relaybf/ber.hpp"
#include "relaybf/harness.hpp"
#include "relaybf/targets.hpp"

using namespace relaybf;

namespace {

constexpr int kSpecError = 2;
constexpr int kRuntimeError = 1;

struct Options {
  std::vector<std::string> algorithms{"proposed"};
  int users = 3;
  int streams = 2;
  std::vector<int> tx_antennas{10};
  std::vector<int> relay_antennas{8};
  std::vector<int> relays{3};
  std::vector<double> snr_t_db{12.0};
  std::vector<double> snr_r_db{12.0};
  int trials = 1;
  std::uint64_t seed = 1;
  std::string channels_file;
  std::string save_channels;
  int max_iters = 200;
  double delta_max = 1e-4;
  double rho = 1.2;
  double rho_c = 0.5;
  double tau = 0.3;
  double adal_rho = 9.0;
  double rho2 = 0.0;
  bool incorporate_power_constraints = false;
  bool no_timing = false;
  std::string out = "relaybf_out";
  // ber
  int symbols = 10000;
  // targets-search
  int budget = 2;
  int max_alt = 100;
};

void add_common(CLI::App* app, Options& o) {
  app->add_option("--users", o.users, "Users K")->check(CLI::PositiveNumber);
  app->add_option("--streams", o.streams, "Streams per user d")->check(CLI::PositiveNumber);
  app->add_option("--tx-antennas", o.tx_antennas, "Antennas per transmitter/receiver M (list)")->delimiter(',');
  app->add_option("--relay-antennas", o.relay_antennas, "Antennas per relay N (list)")->delimiter(',');
  app->add_option("--relays", o.relays, "Relay count R (list)")->delimiter(',');
  app->add_option("--snr-t-db", o.snr_t_db, "Transmit SNR in dB (list)")->delimiter(',');
  app->add_option("--snr-r-db", o.snr_r_db, "Relay SNR in dB (list)")->delimiter(',');
  app->add_option("--trials", o.trials, "Monte Carlo trials per configuration")->check(CLI::PositiveNumber);
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--out", o.out, "Output directory");
}

void add_algorithm_flags(CLI::App* app, Options& o) {
  app->add_option("--algorithms", o.algorithms, "proposed,admm-bg,adal,centralized,joint")->delimiter(',');
  app->add_option("--channels-file", o.channels_file, "Read channel draws from this file");
  app->add_option("--save-channels", o.save_channels, "Also store the generated draws in this file");
  app->add_option("--max-iters", o.max_iters, "Iteration cap s_max")->check(CLI::PositiveNumber);
  app->add_option("--delta-max", o.delta_max, "SINR deviation tolerance")->check(CLI::PositiveNumber);
  app->add_option("--rho", o.rho, "Penalty of the proposed, ADMM-BG and joint updates")->check(CLI::PositiveNumber);
  app->add_option("--rho-c", o.rho_c, "Consensus dual step")->check(CLI::PositiveNumber);
  app->add_option("--tau", o.tau, "ADAL relaxation step")->check(CLI::Range(1e-12, 1.0));
  app->add_option("--adal-rho", o.adal_rho, "ADAL penalty")->check(CLI::PositiveNumber);
  app->add_option("--rho2", o.rho2, "Border regularization of the relay power blocks")->check(CLI::NonNegativeNumber);
  app->add_flag("--incorporate-power-constraints", o.incorporate_power_constraints,
                "Add the transmit and relay budgets to every subproblem");
  app->add_flag("--no-timing", o.no_timing, "Write 0 in the wall-time column for reproducible files");
}

std::vector<SnrPoint> snr_grid(const Options& o) {
  const auto& t = o.snr_t_db;
  const auto& r = o.snr_r_db;
  if (t.empty() || r.empty()) throw std::invalid_argument("SNR lists must not be empty");
  if (t.size() != r.size() && t.size() != 1 && r.size() != 1) {
    throw std::invalid_argument("--snr-t-db and --snr-r-db need equal lengths, or one of them a single value");
  }
  std::vector<SnrPoint> out;
  const size_t n = std::max(t.size(), r.size());
  for (size_t i = 0; i < n; ++i) out.push_back({t[t.size() == 1 ? 0 : i], r[r.size() == 1 ? 0 : i]});
  return out;
}

ExperimentSpec make_spec(const Options& o) {
  ExperimentSpec spec;
  spec.K = o.users;
  spec.d = o.streams;
  spec.networks.clear();
  for (int M : o.tx_antennas)
    for (int N : o.relay_antennas)
      for (int R : o.relays) spec.networks.push_back({M, N, R});
  spec.snrs = snr_grid(o);
  spec.algorithms.clear();
  for (const auto& name : o.algorithms) spec.algorithms.push_back(parse_algorithm(name));
  spec.trials = o.trials;
  spec.seed = o.seed;
  spec.channels_file = o.channels_file;

  spec.ctrl.s_max = o.max_iters;
  spec.ctrl.delta_max = o.delta_max;
  spec.ctrl.rho = o.rho;
  spec.ctrl.rho_c = o.rho_c;
  spec.ctrl.tau = o.tau;
  spec.ctrl.rho2 = o.rho2;
  spec.ctrl.incorporate_power_constraints = o.incorporate_power_constraints;
  spec.adal_ctrl = spec.ctrl;
  spec.adal_ctrl.rho = o.adal_rho;
  spec.validate();
  return spec;
}

std::ofstream open_output(const Options& o, const std::string& name) {
  std::filesystem::create_directories(o.out);
  const auto path = std::filesystem::path(o.out) / name;
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string());
  return out;
}

void print_summary(const std::vector<SummaryRow>& rows) {
  for (const auto& r : rows) {
    std::cout << "config " << r.config_id << " (" << r.M << '-' << r.N << '-' << r.R << ", " << r.snr_t_db << '/'
              << r.snr_r_db << " dB) " << to_string(r.algorithm) << ": " << r.converged << '/' << r.trials
              << " converged, mean power " << watts_to_dbm(r.mean_total_power_w) << " dBm, mean sum-SINR "
              << watts_to_dbm(r.mean_sum_sinr) << " dBm, mean iterations " << r.mean_iterations
              << ", infeasible rate " << 100.0 * r.infeasible_rate << "%\n";
  }
}

int cmd_run(const Options& o) {
  const ExperimentSpec spec = make_spec(o);
  if (!o.save_channels.empty()) {
    if (!spec.channels_file.empty()) throw std::invalid_argument("--save-channels and --channels-file exclude each other");
    save_channels(o.save_channels, generate_channel_file(spec));
  }
  const ExperimentResult res = run_experiment(spec, &std::cerr);
  emit_report(o.out, res, !o.no_timing);
  print_summary(res.summary);
  return 0;
}

int cmd_save_channels(const Options& o) {
  const ExperimentSpec spec = make_spec(o);
  std::string path = o.save_channels;
  if (path.empty()) {
    std::filesystem::create_directories(o.out);
    path = (std::filesystem::path(o.out) / "channels.rnac").string();
  }
  const ChannelFile file = generate_channel_file(spec);
  save_channels(path, file);
  std::cout << "stored " << file.instances.size() << " draws in " << path << '\n';
  return 0;
}

int cmd_ber(const Options& o) {
  Options po = o;
  po.algorithms = {"proposed"};
  const ExperimentSpec spec = make_spec(po);
  auto out = open_output(o, "ber.csv");
  out << "config_id,M,N,R,snr_t_db,snr_r_db,trial,converged,user,stream,ber\n";
  for (int id = 0; id < spec.config_count(); ++id) {
    const NetworkConfig cfg = spec.config(id);
    for (int t = 0; t < spec.trials; ++t) {
      const TrialInstance trial = make_trial(cfg, spec.trial_seed(id, t));
      RunOutcome run;
      const TrialRecord rec = run_algorithm(Algorithm::Proposed, trial, spec, &run);
      if (run.X.empty()) continue;
      BeamformerSet bf = trial.bf;
      for (int k = 0; k < cfg.K; ++k)
        for (int l = 0; l < cfg.d; ++l) bf.u[k][l] = rank_one_extract(run.X[k][l]).u;
      const auto ber = ber_simulate(cfg, trial.ch, bf, o.symbols, derive_seed(trial.seed, 4));
      for (int k = 0; k < cfg.K; ++k) {
        for (int l = 0; l < cfg.d; ++l) {
          out << id << ',' << cfg.M << ',' << cfg.N << ',' << cfg.R << ',' << cfg.snr_t_db << ',' << cfg.snr_r_db
              << ',' << t << ',' << (rec.converged ? 1 : 0) << ',' << k << ',' << l << ',' << ber[k][l] << '\n';
        }
      }
      std::cerr << "config " << id << " trial " << t << " done\n";
    }
  }
  std::cout << "wrote " << (std::filesystem::path(o.out) / "ber.csv").string() << '\n';
  return 0;
}

int cmd_targets_search(const Options& o) {
  Options po = o;
  po.algorithms = {"proposed"};
  const ExperimentSpec spec = make_spec(po);
  auto out = open_output(o, "targets.csv");
  out << "config_id,M,N,R,snr_t_db,snr_r_db,trial,w,found,lower_sum_sinr_dbm,upper_sum_sinr_dbm,sum_sinr_dbm,"
         "lower_power_dbm,total_power_dbm,probes\n";
  for (int id = 0; id < spec.config_count(); ++id) {
    const NetworkConfig cfg = spec.config(id);
    for (int t = 0; t < spec.trials; ++t) {
      const TrialInstance trial = make_trial(cfg, spec.trial_seed(id, t));
      const auto upper = max_sinr_targets(cfg, trial.ch, trial.bf.F, derive_seed(trial.seed, 2), o.max_alt);
      AlgorithmControl ctrl = spec.ctrl;
      ctrl.seed = derive_seed(trial.seed, 3);
      try {
        BeamformerSet bf = trial.bf;
        bf.vbar = upper.bf.vbar;
        const auto res = linear_target_search(cfg, trial.ch, bf, trial.targets, upper.targets, o.budget, ctrl);
        out << id << ',' << cfg.M << ',' << cfg.N << ',' << cfg.R << ',' << cfg.snr_t_db << ',' << cfg.snr_r_db
            << ',' << t << ',' << res.w << ',' << (res.feasible ? 1 : 0) << ','
            << watts_to_dbm(sum_sinr(trial.targets)) << ',' << watts_to_dbm(sum_sinr(upper.targets)) << ','
            << watts_to_dbm(sum_sinr(res.sinrs)) << ',' << watts_to_dbm(res.probes.front().total_power) << ','
            << watts_to_dbm(res.total_power) << ',' << res.probes.size() << '\n';
      } catch (const std::invalid_argument& e) {
        // an infeasible lower bound skips the trial rather than the sweep
        std::cerr << "config " << id << " trial " << t << ": " << e.what() << '\n';
        continue;
      }
      std::cerr << "config " << id << " trial " << t << " done\n";
    }
  }
  std::cout << "wrote " << (std::filesystem::path(o.out) / "targets.csv").string() << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distributed transmit and relay beamforming experiments"};
  app.require_subcommand(1);
  Options o;

  auto* run = app.add_subcommand("run", "Run the selected algorithms over a sweep and write CSV reports");
  add_common(run, o);
  add_algorithm_flags(run, o);

  auto* save = app.add_subcommand("save-channels", "Generate channel draws and store them");
  add_common(save, o);
  save->add_option("--save-channels", o.save_channels, "Destination file (default OUT/channels.rnac)");

  auto* ber = app.add_subcommand("ber", "QPSK bit error rate with the proposed transmit filters");
  add_common(ber, o);
  add_algorithm_flags(ber, o);
  ber->add_option("--symbols", o.symbols, "Symbols per stream")->check(CLI::PositiveNumber);

  auto* search = app.add_subcommand("targets-search", "Bisection between random and max-SINR targets");
  add_common(search, o);
  add_algorithm_flags(search, o);
  search->add_option("--budget", o.budget, "Bisection probes")->check(CLI::PositiveNumber);
  search->add_option("--max-alt", o.max_alt, "Max-SINR alternations")->check(CLI::NonNegativeNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kSpecError;
  }

  try {
    if (*run) return cmd_run(o);
    if (*save) return cmd_save_channels(o);
    if (*ber) return cmd_ber(o);
    return cmd_targets_search(o);
  } catch (const ChannelFileException& e) {
    std::cerr << "error: " << e.what() << '\n';
    return static_cast<int>(e.code());
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSpecError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kRuntimeError;
  }
}
