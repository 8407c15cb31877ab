"""OTFS link simulator with pilot-aided Doppler ambiguity estimation."""

import json

from ._otfs_amb import (
    ConfigError,
    DopplerDecomposition,
    GridConfig,
    PathEstimate,
    PathParams,
    __version__,
    ambiguity_phase,
    apply_channel,
    dd_channel_response,
    decompose_doppler,
    default_config_json,
    demodulate,
    estimate_paths,
    max_unambiguous_velocity,
    modulate,
    op_count,
    oracle_check,
    oracle_dd_response,
    phase_compensate,
    pilot_frame,
    run_csv,
    sweep_csv,
    velocity_to_normalized_doppler,
)


def run(config=None, **run_overrides):
    """Runs one scheme/mode over its SNR grid and returns the CSV text.

    config is a dict in the JSON config layout; keyword arguments override
    entries of its "run" section.
    """
    cfg = dict(config or {})
    cfg["run"] = {**cfg.get("run", {}), **run_overrides}
    return run_csv(json.dumps(cfg))
