import json
import math
import os
import pathlib

import numpy as np
import pytest

import nlflow

SOURCE = pathlib.Path(os.environ.get("NLFLOW_SOURCE_DIR", pathlib.Path(__file__).resolve().parents[2]))


def bump(grid, center, radius):
    x = np.array([c[0] for c in grid.centers()])
    q = ((x - center) / radius) ** 2
    return np.where(q < 1, (1 - q) ** 3, 0.0)


def test_periodic_mass_is_conserved():
    g = nlflow.Grid.line(0.0, 1.0, 200)
    rho = bump(g, 0.5, 0.2)
    tr = nlflow.solve(g, rho, nlflow.SupplyChainModel(), 0.5, boundary=nlflow.Boundary.periodic)
    m0 = nlflow.mass(g, rho)
    assert abs(nlflow.mass(g, tr.final_state) - m0) <= 1e-12 * m0
    assert tr.final_state.shape == (200,)


def test_supply_chain_stays_below_initial_max():
    g = nlflow.Grid.line(-1.0, 3.0, 300)
    rho = bump(g, 0.0, 0.4)
    tr = nlflow.solve(g, rho, nlflow.SupplyChainModel(), 0.8)
    assert max(s.max() for s in tr.states) <= rho.max() + 1e-12


def test_tangent_is_linear():
    g = nlflow.Grid.line(-1.0, 3.0, 200)
    rho = bump(g, 0.0, 0.4)
    model = nlflow.SupplyChainModel()
    tr = nlflow.solve(g, rho, model, 0.3)
    r = bump(g, 0.1, 0.3)
    np.testing.assert_allclose(nlflow.tangent(tr, 2.0 * r, model), 2.0 * nlflow.tangent(tr, r, model), atol=1e-13)


def test_constants():
    assert nlflow.wallis(0) == pytest.approx(math.pi / 2)
    assert nlflow.wallis(2) == pytest.approx(math.pi / 4)
    assert nlflow.existence_time(1.0, math.e, lambda b: 2.0) == pytest.approx(0.5, abs=1e-14)
    kappa, kappa0 = nlflow.kappa_constants(1.0, 2)
    assert kappa0 / kappa >= 3 * math.pi / 8


def test_bad_grid_raises_config_error():
    with pytest.raises(nlflow.ConfigError):
        nlflow.solve(nlflow.Grid.line(0.0, 1.0, 10), np.zeros(5), nlflow.SupplyChainModel(), 0.1)


def test_cli_simulate_and_bad_descriptor(tmp_path):
    code, _, _ = nlflow.run_cli("simulate", str(SOURCE / "configs" / "supply_chain.json"), str(tmp_path / "sim"))
    assert code == 0
    summary = json.loads((tmp_path / "sim" / "summary.json").read_text())
    assert summary["mass_drift"] < 1e-12
    assert (tmp_path / "sim" / "descriptor.json").exists()
    code, _, err = nlflow.run_cli("simulate", str(SOURCE / "tests" / "data" / "bad_cfl.json"), str(tmp_path / "bad"))
    assert code == 2
    assert "solver.cfl" in err


def test_schema_is_json():
    schema = json.loads(nlflow.schema())
    assert "initial" in schema["required"]
