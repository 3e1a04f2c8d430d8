import warnings

import numpy as np
import pytest

from spinecho import get_scenario, materialize, run_protocol

TWO_PI = 2.0 * np.pi


@pytest.fixture(scope="session")
def fig2_run():
    """Full bulk-sample echo run, shared by the acceptance criteria."""
    cfg = get_scenario("fig2-echoes")
    mat = materialize(cfg)
    seq = mat.sequence
    extra = {"second-echo": seq.pi_center + 2.0 * seq.tau_eff}
    traj = run_protocol(mat.cavity, mat.ensembles, seq, mat.integrator,
                        extra_snapshots=extra)
    return mat, traj


@pytest.fixture()
def quiet_truncation():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message="frequency grid spans")
        yield
