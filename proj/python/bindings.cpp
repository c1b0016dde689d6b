#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "relaybf/ber.hpp"
#include "relaybf/harness.hpp"

namespace py = pybind11;
using namespace relaybf;

PYBIND11_MODULE(_core, m) {
  m.doc() = "Distributed transmit and relay beamforming for multi-relay MIMO interference networks";

  py::enum_<Algorithm>(m, "Algorithm")
      .value("Proposed", Algorithm::Proposed)
      .value("AdmmBg", Algorithm::AdmmBg)
      .value("Adal", Algorithm::Adal)
      .value("Centralized", Algorithm::Centralized)
      .value("Joint", Algorithm::Joint)
      .def_static("parse", &parse_algorithm)
      .def_property_readonly("cli_name", [](Algorithm a) { return std::string(to_string(a)); });

  py::class_<NetworkConfig>(m, "NetworkConfig")
      .def(py::init<>())
      .def_readwrite("K", &NetworkConfig::K)
      .def_readwrite("d", &NetworkConfig::d)
      .def_readwrite("M", &NetworkConfig::M)
      .def_readwrite("N", &NetworkConfig::N)
      .def_readwrite("R", &NetworkConfig::R)
      .def_readwrite("sigma_sq", &NetworkConfig::sigma_sq)
      .def_readwrite("snr_t_db", &NetworkConfig::snr_t_db)
      .def_readwrite("snr_r_db", &NetworkConfig::snr_r_db)
      .def_property_readonly("B", &NetworkConfig::B)
      .def_property_readonly("p_tx_max", &NetworkConfig::p_tx_max)
      .def_property_readonly("p_relay_max", &NetworkConfig::p_relay_max)
      .def("validate", &NetworkConfig::validate);

  py::class_<AlgorithmControl>(m, "AlgorithmControl")
      .def(py::init<>())
      .def_readwrite("s_max", &AlgorithmControl::s_max)
      .def_readwrite("delta_max", &AlgorithmControl::delta_max)
      .def_readwrite("incorporate_power_constraints", &AlgorithmControl::incorporate_power_constraints)
      .def_readwrite("rho", &AlgorithmControl::rho)
      .def_readwrite("rho_c", &AlgorithmControl::rho_c)
      .def_readwrite("tau", &AlgorithmControl::tau)
      .def_readwrite("rho2", &AlgorithmControl::rho2)
      .def_readwrite("seed", &AlgorithmControl::seed);

  // Nested channel containers convert to and from lists of complex NumPy arrays.
  py::class_<ChannelSet>(m, "ChannelSet")
      .def(py::init<>())
      .def_readwrite("J", &ChannelSet::J)
      .def_readwrite("G", &ChannelSet::G)
      .def_readwrite("H2", &ChannelSet::H2);

  py::class_<BeamformerSet>(m, "BeamformerSet")
      .def(py::init<>())
      .def_readwrite("u", &BeamformerSet::u)
      .def_readwrite("F", &BeamformerSet::F)
      .def_readwrite("vbar", &BeamformerSet::vbar);

  py::class_<TrialInstance>(m, "TrialInstance")
      .def_readonly("cfg", &TrialInstance::cfg)
      .def_readonly("ch", &TrialInstance::ch)
      .def_readonly("bf", &TrialInstance::bf)
      .def_readwrite("targets", &TrialInstance::targets)
      .def_readonly("seed", &TrialInstance::seed);

  py::class_<TrialRecord>(m, "TrialRecord")
      .def_readonly("config_id", &TrialRecord::config_id)
      .def_readonly("trial", &TrialRecord::trial)
      .def_readonly("algorithm", &TrialRecord::algorithm)
      .def_readonly("converged", &TrialRecord::converged)
      .def_readonly("iflag", &TrialRecord::iflag)
      .def_readonly("iterations", &TrialRecord::iterations)
      .def_readonly("total_power_w", &TrialRecord::total_power_w)
      .def_readonly("sum_sinr", &TrialRecord::sum_sinr)
      .def_readonly("message_count", &TrialRecord::message_count)
      .def_readonly("complexity_units", &TrialRecord::complexity_units)
      .def_readonly("max_rank_ratio", &TrialRecord::max_rank_ratio)
      .def_readonly("max_deviation", &TrialRecord::max_deviation)
      .def_readonly("diagnostics", &TrialRecord::diagnostics);

  py::class_<NetworkShape>(m, "NetworkShape")
      .def(py::init<int, int, int>(), py::arg("M") = 10, py::arg("N") = 8, py::arg("R") = 3)
      .def_readwrite("M", &NetworkShape::M)
      .def_readwrite("N", &NetworkShape::N)
      .def_readwrite("R", &NetworkShape::R);

  py::class_<SnrPoint>(m, "SnrPoint")
      .def(py::init<double, double>(), py::arg("snr_t_db") = 12.0, py::arg("snr_r_db") = 12.0)
      .def_readwrite("snr_t_db", &SnrPoint::snr_t_db)
      .def_readwrite("snr_r_db", &SnrPoint::snr_r_db);

  py::class_<ExperimentSpec>(m, "ExperimentSpec")
      .def(py::init<>())
      .def_readwrite("K", &ExperimentSpec::K)
      .def_readwrite("d", &ExperimentSpec::d)
      .def_readwrite("networks", &ExperimentSpec::networks)
      .def_readwrite("snrs", &ExperimentSpec::snrs)
      .def_readwrite("algorithms", &ExperimentSpec::algorithms)
      .def_readwrite("trials", &ExperimentSpec::trials)
      .def_readwrite("seed", &ExperimentSpec::seed)
      .def_readwrite("channels_file", &ExperimentSpec::channels_file)
      .def_readwrite("ctrl", &ExperimentSpec::ctrl)
      .def_readwrite("adal_ctrl", &ExperimentSpec::adal_ctrl)
      .def("validate", &ExperimentSpec::validate)
      .def("config", &ExperimentSpec::config)
      .def("config_count", &ExperimentSpec::config_count)
      .def("trial_seed", &ExperimentSpec::trial_seed);

  m.def("generate_channels", &generate_channels, py::arg("cfg"), py::arg("seed"));
  m.def("init_beamformers", &init_beamformers, py::arg("cfg"), py::arg("channels"), py::arg("seed"));
  m.def("all_stream_sinrs", py::overload_cast<const BeamformerSet&, const ChannelSet&, const NetworkConfig&>(
                                &all_stream_sinrs),
        py::arg("bf"), py::arg("channels"), py::arg("cfg"));
  m.def("total_power", py::overload_cast<const BeamformerSet&, const ChannelSet&, const NetworkConfig&>(&total_power),
        py::arg("bf"), py::arg("channels"), py::arg("cfg"));
  m.def("trial_seed", py::overload_cast<std::uint64_t, int, int>(&trial_seed), py::arg("master"),
        py::arg("shape_index"), py::arg("trial"));
  m.def("make_trial", &make_trial, py::arg("cfg"), py::arg("seed"));
  m.def(
      "run_algorithm",
      [](Algorithm algo, const TrialInstance& trial, const ExperimentSpec& spec) {
        py::gil_scoped_release release;
        return run_algorithm(algo, trial, spec);
      },
      py::arg("algorithm"), py::arg("trial"), py::arg("spec"));
  m.def(
      "run_experiment",
      [](const ExperimentSpec& spec) {
        ExperimentResult res;
        {
          py::gil_scoped_release release;
          res = run_experiment(spec);
        }
        return res.records;
      },
      py::arg("spec"), "Runs the sweep and returns one record per trial and algorithm.");
  m.def(
      "save_channels",
      [](const std::string& path, const ExperimentSpec& spec) { save_channels(path, generate_channel_file(spec)); },
      py::arg("path"), py::arg("spec"));
  m.def(
      "load_channels",
      [](const std::string& path) {
        const ChannelFile file = load_channels(path);
        return py::make_tuple(file.cfg, file.master_seed, file.instances.size());
      },
      py::arg("path"), "Returns (config, master seed, instance count).");
  m.def("message_load", &message_load, py::arg("algorithm"), py::arg("B"));
  m.def("complexity_units", &complexity_units, py::arg("algorithm"), py::arg("M"), py::arg("N"), py::arg("B"),
        py::arg("R"));
  m.def("qpsk_ber_theory", &qpsk_ber_theory, py::arg("snr"));
  m.def("watts_to_dbm", &watts_to_dbm, py::arg("watts"));

  py::register_exception<ChannelFileException>(m, "ChannelFileError", PyExc_IOError);
}
