import csv
import json

import numpy as np
import pytest

from opendicke import sweep
from opendicke.config import RunConfig
from opendicke.sweep import locate_transition, run


def _read(path):
    with open(path) as fh:
        return list(csv.DictReader(fh))


def _cfg(tmp_path, **kw):
    data = {"model": {"N": 2, "g": 2.0, "kappa_over_g": 1.0}, "output": {"dir": str(tmp_path)}}
    data.update(kw)
    return RunConfig.from_dict(data)


def test_single_point_ground_state(tmp_path):
    cfg = _cfg(tmp_path, grids={"E": [0.0]})
    assert run(cfg) == 0
    rows = _read(tmp_path / "steady-sweep.csv")
    assert len(rows) == 1
    r = rows[0]
    assert float(r["n_tls"]) == 0.0 and float(r["m_ph"]) == 0.0
    assert float(r["jz"]) == -1.0
    assert float(r["A"]) == pytest.approx(0.0, abs=1e-12)
    assert r["g2"] == "nan" and r["status"] == "ok" and r["M"] == "1"
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["points"][0]["status"] == "ok"
    assert man["config_sha256"] == cfg.digest()
    assert {"numpy", "scipy", "opendicke"} <= set(man["versions"])


def test_column_order(tmp_path):
    cfg = _cfg(tmp_path, grids={"E": [1.0], "delta_over_gamma": [0.0, 1.0]}, solver={"fock": 3})
    run(cfg)
    header = (tmp_path / "steady-sweep.csv").read_text().splitlines()[0].split(",")
    assert header[:2] == ["E", "delta_over_gamma"]
    assert header[2:7] == ["n_tls", "n_tls_norm", "m_ph", "output_rate", "g2"]
    assert header[-5:] == list(sweep.META_COLUMNS)


@pytest.mark.parametrize("workers", [1, 2])
def test_deterministic_output(tmp_path, workers):
    grids = {"E": {"linear": [0.5, 2.0, 3]}, "kappa_over_g": [0.5, 2.0]}
    a = _cfg(tmp_path / "a", grids=grids, workers=1)
    b = _cfg(tmp_path / "b", grids=grids, workers=workers)
    assert run(a) == 0 and run(b) == 0
    assert (tmp_path / "a/steady-sweep.csv").read_bytes() == (tmp_path / "b/steady-sweep.csv").read_bytes()
    ma = json.loads((tmp_path / "a/manifest.json").read_text())
    mb = json.loads((tmp_path / "b/manifest.json").read_text())
    for m in (ma, mb):
        for k in ("started", "finished", "config"):
            m.pop(k)
        for p in m["points"]:
            p.pop("wall_time")
    ma.pop("config_sha256"), mb.pop("config_sha256")
    if workers == 1:
        assert ma == mb


def test_failing_point_is_isolated(tmp_path):
    # a tiny cutoff ceiling makes the strongly driven point fail
    cfg = _cfg(tmp_path, grids={"E": [0.0, 0.5, 40.0]}, solver={"fock_M_max": 11})
    assert run(cfg) == 1
    rows = _read(tmp_path / "steady-sweep.csv")
    assert [r["status"] for r in rows] == ["ok", "ok", "failed"]
    assert rows[2]["n_tls"] == "nan"
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["n_failed"] == 1
    assert "FockCutoffError" in man["points"][2]["error"]
    # the good points are the same as in a sweep without the bad one
    run(_cfg(tmp_path / "ok", grids={"E": [0.0, 0.5]}, solver={"fock_M_max": 11}))
    good = _read(tmp_path / "ok/steady-sweep.csv")
    assert good == rows[:2]


def test_gap_sweep_columns(tmp_path):
    cfg = _cfg(tmp_path, protocol="gap-sweep", grids={"E": [0.0, 1.0]}, solver={"fock": 3})
    assert run(cfg) == 0
    rows = _read(tmp_path / "gap-sweep.csv")
    assert float(rows[0]["gap_over_gamma"]) > 0
    assert float(rows[0]["lambda1_re"]) < 0


def test_oracle_check_protocol(tmp_path):
    cfg = _cfg(tmp_path, protocol="oracle-check", grids={"N": [2, 3]}, solver={"fock": 2})
    assert run(cfg) == 0
    rows = _read(tmp_path / "oracle-check.csv")
    assert {r["N"] for r in rows} == {"2", "3"}
    assert all(r["passed"] == "1" for r in rows)
    assert {r["check"] for r in rows} == {"generator", "steady"}


def test_cascade_protocol(tmp_path):
    cfg = _cfg(tmp_path, protocol="cascade", grids={"E": [0.5, 2.0]}, solver={"fock": 3},
               cascade={"t_max": 5.0, "n_out": 30})
    assert run(cfg) == 0
    rows = _read(tmp_path / "cascade.csv")
    assert len(rows) == 30
    assert list(rows[0])[:2] == ["t", "p_dark_l1"]
    man = json.loads((tmp_path / "manifest.json").read_text())
    assert man["result"]["E_star"] in (0.5, 2.0)
    assert float(rows[-1]["p_dark_l1"]) > 0.99


def test_transition_flagged_for_monotone_g2():
    est = locate_transition([1, 2, 3, 4], [1.0, 1.1, 1.2, 1.3], [0.1, 0.2, 0.3, 0.4])
    assert est.flagged and np.isnan(est.E_star)
    est = locate_transition([1, 2, 3], [1.0, 1.0, 1.0], [0, 0, 0])
    assert est.flagged


def test_transition_estimates():
    E = [4, 1, 2, 3, 5]
    g2 = [1.5, 1.0, 1.2, 2.0, 1.1]
    n = [0.45, 0.05, 0.1, 0.3, 0.5]
    est = locate_transition(E, g2, n)
    assert not est.flagged
    assert est.E_star == 3.0 and est.index == 3
    assert est.E_slope == 2.5


def test_chains_group_by_non_drive_parameters():
    cfg = RunConfig.from_dict({"grids": {"E": [1, 2], "kappa_over_g": [1, 3]}})
    groups = sweep.chains(cfg)
    assert [[i for i, _ in g] for g in groups] == [[0, 2], [1, 3]]
