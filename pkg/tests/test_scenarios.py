import math
import os

import numpy as np
import pytest

from chainsync import (
    ParseError,
    RangeError,
    UnknownKey,
    format_config,
    parse_config,
    resolve_spec,
    run_scenario,
    scan_delayed_sync,
    simulate,
    sweep_plug_site,
)
from chainsync.errors import ConfigError

SMALL = {"M": 24, "horizon": 60.0, "site_n": 1}


def test_preset_fig2_parameters():
    spec = parse_config("preset = fig2_dissipation\n")
    assert spec.network.M == 300
    assert spec.network.omega0 == 0.4
    assert spec.network.g == 1.2
    assert spec.probes.omega2 == 1.1
    assert spec.probes.lam == 0.5
    assert spec.probes.K == 0.2
    assert (spec.probes.site_m, spec.probes.site_n) == (1, 1)
    assert (spec.initial.x1, spec.initial.x2) == (0.14, 1.4)
    assert (spec.initial.p1, spec.initial.p2) == (0.0, 0.0)
    assert spec.run.horizon == 1200.0


def test_preset_table():
    fig4 = resolve_spec("fig4_edges")
    assert (fig4.probes.site_m, fig4.probes.site_n) == (1, 300)
    assert fig4.probes.lam == 0.0 and fig4.probes.K == 0.2
    assert (fig4.initial.x1, fig4.initial.x2) == (1.4, 1.4)
    fig5 = resolve_spec("fig5_entanglement_common")
    assert fig5.probes.omega2 == 1.2 and fig5.probes.K == 0.8
    assert (fig5.initial.r1, fig5.initial.r2) == (2.0, 2.0)
    fig6 = resolve_spec("fig6_mi_edges")
    assert fig6.probes.K == 0.2 and fig6.probes.site_n == 300
    appb = resolve_spec("appB_sweep")
    assert appb.probes.K == 0.06 and appb.probes.lam == 0.5
    assert appb.run.sweep_stop == 300


def test_override_on_preset():
    spec = parse_config("preset = fig3_common_node\nK = 0.1\n")
    assert spec.probes.K == 0.1
    assert spec.probes.lam == 0.0  # preset value kept


def test_sectioned_config_with_comments():
    text = """
# a scenario
preset = fig2_dissipation

[network]
M = 40          # downscaled
omega0 = 0.4

[run]
horizon = 80.0
"""
    spec = parse_config(text)
    assert spec.network.M == 40
    assert spec.run.horizon == 80.0
    assert spec.probes.lam == 0.5


def test_parse_errors_carry_line_numbers():
    with pytest.raises(ParseError) as err:
        parse_config("preset = fig2_dissipation\nK 3\n")
    assert err.value.lineno == 2
    with pytest.raises(ParseError) as err:
        parse_config("[chain]\n")
    assert err.value.lineno == 1
    with pytest.raises(ParseError):
        parse_config("M = twelve\n")


def test_unknown_keys_are_errors():
    with pytest.raises(UnknownKey):
        parse_config("coupling = 3\n")
    with pytest.raises(UnknownKey):
        parse_config("[network]\nK = 0.2\n")  # K lives in [probes]
    with pytest.raises(UnknownKey):
        resolve_spec("custom", {"nope": 1})


def test_range_errors():
    with pytest.raises(RangeError):
        parse_config("site_m = 0\n")
    with pytest.raises(RangeError):
        parse_config("site_n = 301\n")
    with pytest.raises(RangeError):
        parse_config("M = 1\n")
    with pytest.raises(RangeError):
        parse_config("dt = 0\n")
    with pytest.raises(RangeError):
        parse_config("sign2 = 3\n")
    with pytest.raises(RangeError):
        parse_config("preset = fig7\n")
    with pytest.raises(RangeError):
        resolve_spec("custom", {"sweep_start": 10, "sweep_stop": 5})
    with pytest.raises(RangeError):
        resolve_spec("custom", {"squeeze_axis": "diagonal"})


def test_config_roundtrip():
    spec = resolve_spec("fig5_entanglement_common", {"M": 30, "site_n": 1, "horizon": 10.0})
    assert parse_config(format_config(spec)) == spec


def test_run_scenario_writes_artifacts(tmp_path):
    spec = resolve_spec("fig2_dissipation", SMALL)
    record = run_scenario(spec, out_dir=tmp_path)
    names = {p.split("/")[-1] for p in record.files}
    assert names == {
        "config.txt", "means.csv", "variances.csv", "sync.csv",
        "quantum.csv", "rayleigh.txt", "record.txt",
    }
    for path in record.files:
        assert os.path.getsize(path) > 0
    header = (tmp_path / "means.csv").read_text().splitlines()[0]
    assert header == "t,x1,x2,p1,p2,q1,q2"
    assert (tmp_path / "variances.csv").read_text().splitlines()[0] == "t,var_x1,var_x2"
    assert (tmp_path / "sync.csv").read_text().splitlines()[0] == "t,c_means,c_vars"
    assert (tmp_path / "quantum.csv").read_text().splitlines()[0] == "t,E,MI,S1,S2,S12"
    record_text = (tmp_path / "record.txt").read_text()
    assert "revival_time = 4.80000000000e+01" in record_text
    assert f"config_hash = {record.config_hash}" in record_text
    # the echoed config parses back to the same spec
    assert parse_config((tmp_path / "config.txt").read_text()) == spec


def test_rerun_is_byte_identical(tmp_path):
    spec = resolve_spec("fig2_dissipation", SMALL)
    run_scenario(spec, out_dir=tmp_path / "a")
    run_scenario(spec, out_dir=tmp_path / "b")
    for name in ("means.csv", "variances.csv", "sync.csv", "quantum.csv", "record.txt"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_quantum_csv_optional(tmp_path):
    spec = resolve_spec("fig2_dissipation", dict(SMALL, write_quantum=False))
    record = run_scenario(spec, out_dir=tmp_path)
    assert not (tmp_path / "quantum.csv").exists()
    assert "E_plateau" not in record.summary


def test_decoupled_probes_oscillating_sync():
    # K = 0: no dissipation channel, the windowed correlation never settles
    spec = resolve_spec("custom", {"M": 24, "K": 0.0, "horizon": 200.0})
    data = simulate(spec)
    values = data.sync_means.values[np.isfinite(data.sync_means.values)]
    signs = np.sign(values)
    assert np.sum(signs[1:] != signs[:-1]) >= 2
    assert np.max(np.abs(values)) < 0.9  # never locks
    # no dissipation channel: the probe oscillation does not decay
    early = np.sqrt(np.mean(data.x1[data.times < 20.0] ** 2))
    late = np.sqrt(np.mean(data.x1[data.times > 180.0] ** 2))
    assert late > 0.5 * early


def test_squeezed_scenario_sync_on_variances():
    spec = resolve_spec(
        "fig5_entanglement_common", {"M": 24, "site_n": 1, "horizon": 60.0}
    )
    data = simulate(spec)
    # zero-mean squeezed vacuum: mean-based windows are all degenerate
    assert not np.any(data.sync_means.defined)
    assert np.all(np.isfinite(data.sync_vars.values))
    assert data.quantum is not None
    assert np.all(data.quantum.E >= 0.0)
    assert np.all(data.quantum.MI >= -1e-9)


def test_momentum_squeeze_axis_flag():
    pos = simulate(resolve_spec("custom", {"M": 12, "horizon": 5.0, "r1": 1.0, "r2": 1.0}))
    mom = simulate(
        resolve_spec(
            "custom",
            {"M": 12, "horizon": 5.0, "r1": 1.0, "r2": 1.0, "squeeze_axis": "momentum"},
        )
    )
    assert pos.var_x1[0] == pytest.approx(math.exp(-2.0) / 2.0, rel=1e-12)
    assert mom.var_x1[0] == pytest.approx(math.exp(2.0) / 2.0, rel=1e-12)


def test_asymmetric_edges_delayed_synchronization():
    # asymmetric initial kicks leave the zero-delay correlation low in the
    # cross-talk band; scanning the delay over one beat period restores it
    spec = resolve_spec(
        "fig4_edges",
        {"x1": 2.0, "x2": 2.0, "p1": 0.0, "p2": 10.0, "window": 60.0, "write_quantum": False},
    )
    data = simulate(spec)
    band = (320.0, 520.0)
    plain = data.sync_means.in_band(*band)
    plain = plain[np.isfinite(plain)]
    assert np.max(np.abs(plain)) < 0.5
    beat = 2 * np.pi / (spec.probes.omega2 - spec.probes.omega1)
    delays = np.arange(-np.floor(beat), np.floor(beat) + 1e-9, 2.0)
    _, best_c, _ = scan_delayed_sync(data.times, data.x1, data.x2, 60.0, 2.0, delays, band=band)
    assert best_c > 0.9


def test_sweep_single_site_matches_run(tmp_path):
    spec = resolve_spec("appB_sweep", {"M": 24, "horizon": 40.0, "site_n": 5})
    record = sweep_plug_site(spec, sites=[5], out_dir=tmp_path)
    assert record.summary == {"sites": 1, "failed_sites": 0}
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows[0] == "site,t,c"
    data = simulate(spec)
    expected = data.sync_means
    assert len(rows) - 1 == expected.times.size
    got_c = np.array([float(r.split(",")[2]) for r in rows[1:]])
    assert np.allclose(got_c, expected.values, rtol=1e-12)


def test_sweep_worker_invariance(tmp_path):
    spec = resolve_spec("appB_sweep", {"M": 24, "horizon": 40.0})
    sweep_plug_site(spec, sites=range(3, 9), workers=1, out_dir=tmp_path / "w1")
    sweep_plug_site(spec, sites=range(3, 9), workers=3, out_dir=tmp_path / "w3")
    assert (tmp_path / "w1" / "sweep.csv").read_bytes() == (tmp_path / "w3" / "sweep.csv").read_bytes()


def test_sweep_records_failures_and_continues(tmp_path):
    # K far beyond the stability bound: every site fails, the sweep still completes
    spec = resolve_spec("appB_sweep", {"M": 24, "horizon": 40.0, "K": 50.0})
    record = sweep_plug_site(spec, sites=[2, 3], out_dir=tmp_path)
    assert record.summary["failed_sites"] == 2
    body = (tmp_path / "sweep_record.txt").read_text()
    assert "site_2 = InstabilityError" in body
    rows = (tmp_path / "sweep.csv").read_text().splitlines()
    assert rows == ["site,t,c"]


def test_sweep_requires_sweepable_preset():
    spec = resolve_spec("fig3_common_node", {"M": 24})
    with pytest.raises(ConfigError):
        sweep_plug_site(spec, sites=[1])
    with pytest.raises(RangeError):
        sweep_plug_site(resolve_spec("appB_sweep", {"M": 24}), sites=[30])
