"""Python bindings for the relaybf beamforming simulator."""

from ._core import (
    Algorithm,
    AlgorithmControl,
    BeamformerSet,
    ChannelFileError,
    ChannelSet,
    ExperimentSpec,
    NetworkConfig,
    NetworkShape,
    SnrPoint,
    TrialInstance,
    TrialRecord,
    all_stream_sinrs,
    complexity_units,
    generate_channels,
    init_beamformers,
    load_channels,
    make_trial,
    message_load,
    qpsk_ber_theory,
    run_algorithm,
    run_experiment,
    save_channels,
    total_power,
    trial_seed,
    watts_to_dbm,
)

__all__ = [name for name in dir() if not name.startswith("_")]
