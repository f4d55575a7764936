import csv
import json
import math

import numpy as np
import pytest
from click.testing import CliRunner

from weakdev.bounds import iid_bernstein_threshold, thm1_threshold, thm2_threshold
from weakdev.cli import main, parse_x_grid
from weakdev.coefficients import (
    WeightSequence,
    doubling_map_profile,
    infinite_memory_profile,
    markov_contraction_profile,
    validate_profile,
)
from weakdev.errors import ConfigError, DomainError
from weakdev.harness import (
    REPORT_CSV_HEADER,
    ExperimentConfig,
    build_model,
    build_weights,
    dependence_profile_for,
    emit_report,
    hoeffding_phi,
    load_config,
    mc_variance_profile,
    parse_config,
    ratio_spread,
    run_blocksize_asymptotics,
    run_verification,
)
from weakdev.processes import (
    BernoulliShiftGeometric,
    DoublingMap,
    IidUniform,
    InfiniteMemoryChain,
    LipschitzKernelChain,
    doubling_sigma_sq,
    observable_for,
)

_BASE_DOC = {
    "model": "doubling-map",
    "n": 100,
    "x_grid": [0.5, 1.0],
    "theorem": "thm2",
    "reps": 100,
    "base_seed": 7,
}


def _doc(**overrides) -> dict:
    doc = dict(_BASE_DOC)
    doc.update(overrides)
    return doc


# ---------------------------------------------------------------------------
# config parsing


def test_parse_config_defaults():
    cfg = parse_config(_doc())
    assert isinstance(cfg.model, DoublingMap)
    assert cfg.observable == "centered-identity" and cfg.omega == 1
    assert cfg.alpha == 0.01 and cfg.out is None
    assert cfg.x_grid == (0.5, 1.0)


def test_parse_config_observable_forms():
    cfg = parse_config(_doc(observable="centered-cosine"))
    assert cfg.observable == "centered-cosine"
    cfg = parse_config(_doc(observable={"id": "centered-cosine", "omega": 3}))
    assert cfg.observable == "centered-cosine" and cfg.omega == 3
    with pytest.raises(ConfigError) as ei:
        parse_config(_doc(observable={"id": "centered-cosine", "phase": 1}))
    assert ei.value.field == "observable.phase"
    with pytest.raises(ConfigError) as ei:
        parse_config(_doc(observable="sine"))
    assert ei.value.field == "observable"


def test_parse_config_unknown_and_missing_keys():
    with pytest.raises(ConfigError) as ei:
        parse_config(_doc(extra=1))
    assert ei.value.field == "extra"
    doc = _doc()
    del doc["reps"]
    with pytest.raises(ConfigError) as ei:
        parse_config(doc)
    assert ei.value.field == "reps"
    with pytest.raises(ConfigError):
        parse_config("not a dict")


def test_parse_config_field_validation():
    with pytest.raises(ConfigError) as ei:
        parse_config(_doc(theorem="thm3"))
    assert ei.value.field == "theorem"
    with pytest.raises(ConfigError):
        parse_config(_doc(n=0))
    with pytest.raises(ConfigError):
        parse_config(_doc(reps=0))
    with pytest.raises(ConfigError):
        parse_config(_doc(alpha=1.0))
    with pytest.raises(ConfigError):
        parse_config(_doc(x_grid=[0.5, 0.5]))
    with pytest.raises(ConfigError):
        parse_config(_doc(x_grid=[-1.0, 1.0]))
    with pytest.raises(ConfigError):
        parse_config(_doc(x_grid="1,2"))


def test_load_config(tmp_path):
    path = tmp_path / "cfg.json"
    path.write_text(json.dumps(_doc(out="report.csv")))
    cfg = load_config(path)
    assert cfg.out == "report.csv" and cfg.n == 100


# ---------------------------------------------------------------------------
# model construction


def test_build_model_variants():
    assert isinstance(build_model("iid-uniform"), IidUniform)
    assert isinstance(build_model({"variant": "doubling-map"}), DoublingMap)
    m = build_model({"variant": "kernel-chain", "kappa": 0.7})
    assert isinstance(m, LipschitzKernelChain) and m.kappa == 0.7
    m = build_model({"variant": "bernoulli-shift", "theta": 0.4, "truncation": 9})
    assert isinstance(m, BernoulliShiftGeometric) and m.window == 9
    m = build_model(
        {
            "variant": "infinite-memory",
            "weights": {"family": "geometric", "c": 0.5, "ratio": 0.5},
            "truncation": 6,
        }
    )
    assert isinstance(m, InfiniteMemoryChain) and m.window == 6


def test_build_model_errors():
    with pytest.raises(ConfigError) as ei:
        build_model({"variant": "brownian"})
    assert ei.value.field == "model.variant"
    with pytest.raises(ConfigError) as ei:
        build_model({"variant": "kernel-chain"})
    assert ei.value.field == "model.kappa"
    with pytest.raises(ConfigError) as ei:
        build_model({"variant": "doubling-map", "theta": 0.5})
    assert ei.value.field == "model.theta"
    with pytest.raises(ConfigError) as ei:
        build_model({})
    assert ei.value.field == "model.variant"


def test_build_weights_errors():
    assert build_weights({"family": "zero"}).total == 0.0
    with pytest.raises(ConfigError) as ei:
        build_weights({"family": "harmonic"})
    assert ei.value.field == "model.weights.family"
    with pytest.raises(ConfigError) as ei:
        build_weights({"family": "geometric", "c": 0.5})
    assert ei.value.field == "model.weights.ratio"
    with pytest.raises(ConfigError) as ei:
        build_weights({"family": "geometric", "c": 0.5, "ratio": 0.5, "power": 2})
    assert ei.value.field == "model.weights.power"
    with pytest.raises(ConfigError):
        build_weights({})


# ---------------------------------------------------------------------------
# harness glue


def test_dependence_profiles_by_model():
    n = 30
    iid = dependence_profile_for(IidUniform(), n)
    assert iid.kind == "linf" and np.all(iid.delta == 0.0)

    dbl = dependence_profile_for(DoublingMap(), n)
    assert np.array_equal(dbl.delta, doubling_map_profile(n).delta)

    ker = dependence_profile_for(LipschitzKernelChain(kappa=0.6), n)
    assert np.array_equal(ker.delta, markov_contraction_profile(0.6, n).delta)

    th = 0.5
    shift = dependence_profile_for(BernoulliShiftGeometric(theta=th, truncation=20), n)
    for r in range(1, n + 1):
        # block tail: r delta'_r = theta^r / (1 - theta), clipped at r
        assert r * shift.at(r) == pytest.approx(min(th**r / (1.0 - th), float(r)), rel=1e-12)

    w = WeightSequence.geometric(0.5, 0.5)
    mem = dependence_profile_for(InfiniteMemoryChain(weights=w, truncation=6), n)
    assert np.array_equal(mem.delta, infinite_memory_profile(w, n).delta)

    for p in (iid, dbl, ker, shift, mem):
        validate_profile(p)


def test_hoeffding_phi_zeros_and_dyadic():
    n = 8
    zeros = dependence_profile_for(IidUniform(), n)
    assert np.all(hoeffding_phi(zeros, n) == 0.0)

    prof = doubling_map_profile(n)
    phis = hoeffding_phi(prof, n)
    assert phis.shape == (n - 1,)
    for j in range(1, n):
        L = n - j
        total = sum((1 << p) * prof.at(1 << p) for p in range(L.bit_length()) if (1 << p) <= L)
        assert phis[j - 1] == pytest.approx(min(1.0, total / L), abs=1e-15)


def test_hoeffding_phi_requires_linf():
    phi_kind = validate_profile(
        dependence_profile_for(DoublingMap(), 8)
    )
    from weakdev.bounds import DependenceProfile

    with pytest.raises(DomainError):
        hoeffding_phi(DependenceProfile(delta=phi_kind.delta, kind="phi"), 8)
    with pytest.raises(DomainError):
        hoeffding_phi(doubling_map_profile(4), 8)


def test_mc_variance_profile_step_fill():
    model = DoublingMap()
    f = observable_for(model, "centered-identity")
    prof = mc_variance_profile(model, f, 6, reps=500, seed=9)
    assert prof.source == "estimated"
    assert prof.n == 6
    # grid {1, 2, 4, 6}: k = 3 reuses k = 2, k = 5 reuses k = 4
    assert prof.sigma_at(3) == prof.sigma_at(2)
    assert prof.sigma_at(5) == prof.sigma_at(4)
    assert prof.sigma_at(6) != prof.sigma_at(4)


# ---------------------------------------------------------------------------
# verification runs


def test_run_verification_empty_grid():
    cfg = parse_config(_doc(x_grid=[]))
    assert run_verification(cfg) == []


def test_run_verification_thm2_doubling():
    cfg = parse_config(
        _doc(n=1000, x_grid=[0.5, 1.0, 2.0], theorem="thm2", reps=500, base_seed=123)
    )
    rows = run_verification(cfg)
    assert [r.theorem for r in rows] == ["thm2", "iid_eq1_ref"] * 3
    main_rows = [r for r in rows if r.theorem == "thm2"]
    assert [r.k_selected for r in main_rows] == [6, 5, 4]
    assert main_rows[0].threshold == pytest.approx(23.784235376052372, abs=1e-12)
    assert main_rows[1].threshold == pytest.approx(33.93355773061366, abs=1e-12)
    assert main_rows[2].threshold == pytest.approx(47.800992435478314, abs=1e-12)
    for r in main_rows:
        assert r.variance_source == "analytic"
        assert r.variance_used == pytest.approx(doubling_sigma_sq(r.k_selected), abs=1e-15)
        assert r.bound_value == pytest.approx(math.exp(-r.x), abs=1e-15)
        assert r.verdict == "pass"
    ref_rows = [r for r in rows if r.theorem == "iid_eq1_ref"]
    assert all(r.threshold == iid_bernstein_threshold(1000, 1.0 / 12.0, r.x) for r in ref_rows)
    # the iid formula is only a reference on dependent data; x = 2 exceeds it
    assert ref_rows[2].verdict == "fail"


def test_run_verification_thm1_doubling():
    cfg = parse_config(_doc(n=1000, x_grid=[1.0], theorem="thm1", reps=200, base_seed=5))
    rows = run_verification(cfg)
    assert rows[0].theorem == "thm1" and rows[0].k_selected == 1
    # envelope at k* = 1 is the largest sigma_k^2, reached at k = n
    sbar = doubling_sigma_sq(1000)
    assert rows[0].variance_used == pytest.approx(sbar, abs=1e-15)
    assert rows[0].threshold == pytest.approx(thm1_threshold(1000, sbar, 1, 1.0), abs=1e-12)
    assert rows[0].variance_used == pytest.approx(0.24966666666666665, abs=1e-15)


def test_run_verification_iid_eq1_has_no_reference_row():
    cfg = parse_config(
        _doc(model="iid-uniform", n=50, x_grid=[1.0], theorem="iid_eq1", reps=300)
    )
    rows = run_verification(cfg)
    assert [r.theorem for r in rows] == ["iid_eq1"]
    assert rows[0].variance_used == pytest.approx(1.0 / 12.0, abs=1e-15)
    assert rows[0].variance_source == "analytic"
    assert rows[0].k_selected is None


def test_run_verification_hoeffding_iid():
    cfg = parse_config(
        _doc(model="iid-uniform", n=200, x_grid=[2.0], theorem="hoeffding", reps=300)
    )
    rows = run_verification(cfg)
    hrow = rows[0]
    assert hrow.theorem == "hoeffding"
    assert hrow.threshold == pytest.approx(math.sqrt(200.0), abs=1e-12)  # all phi_j = 0
    assert hrow.k_selected is None and hrow.variance_used is None
    assert hrow.variance_source == ""


def test_run_verification_skips_when_no_block_size():
    # kappa so close to 1 that no k <= n admits a valid block size
    cfg = parse_config(
        _doc(
            model={"variant": "kernel-chain", "kappa": 0.999},
            n=50,
            x_grid=[1.0],
            theorem="thm1",
            reps=50,
        )
    )
    rows = run_verification(cfg)
    assert rows[0].theorem == "thm1" and rows[0].verdict == "skipped"
    assert rows[0].threshold is None and rows[0].p_hat is None and rows[0].ci_high is None
    assert rows[0].k_selected is None and rows[0].variance_used is None
    assert rows[1].theorem == "iid_eq1_ref"
    assert rows[1].variance_source == "estimated"


def test_run_verification_deterministic_and_thread_invariant():
    cfg = parse_config(_doc(n=64, x_grid=[1.0], theorem="thm2", reps=300))
    a = run_verification(cfg)
    b = run_verification(cfg)
    c = run_verification(cfg, threads=4)
    assert a == b == c


# ---------------------------------------------------------------------------
# report emission


def test_emit_report_roundtrip(tmp_path):
    cfg = parse_config(_doc(n=64, x_grid=[1.0], theorem="thm2", reps=200))
    rows = run_verification(cfg)
    p1, p2 = tmp_path / "a.csv", tmp_path / "b.csv"
    emit_report(rows, p1)
    emit_report(rows, p2)
    assert p1.read_bytes() == p2.read_bytes()
    with open(p1, newline="") as fh:
        got = list(csv.reader(fh))
    assert got[0] == REPORT_CSV_HEADER
    assert len(got) == len(rows) + 1
    assert float(got[1][1]) == rows[0].x
    assert float(got[1][5]) == rows[0].threshold


def test_emit_report_header_only(tmp_path):
    path = tmp_path / "empty.csv"
    emit_report([], path)
    assert path.read_text() == ",".join(REPORT_CSV_HEADER) + "\n"


def test_emit_report_wraps_oserror(tmp_path):
    bad = tmp_path / "missing-dir" / "x.csv"
    with pytest.raises(OSError, match="cannot write report to"):
        emit_report([], bad)


# ---------------------------------------------------------------------------
# block-size asymptotics


def test_asymptotics_geometric_stable():
    targets = [10.0**-e for e in range(2, 9)]
    rows = run_blocksize_asymptotics("geometric", targets, c=4.0 / 9.0, decay=0.5)
    assert [r.target for r in rows] == targets
    assert all(r.k_star >= 1 for r in rows)
    assert ratio_spread(rows) <= 1.2
    # k* ~ ln(1/v) / ln(1/decay); the normalized ratio approaches 1/ln 2
    assert rows[-1].ratio == pytest.approx(1.0 / math.log(2.0), rel=0.05)


def test_asymptotics_polynomial_power_law():
    # delta_k = c k^-3 gives k delta_k = c k^-2, so k* ~ sqrt(c/v):
    # dividing v by 4 doubles the minimal block size
    rows = run_blocksize_asymptotics("polynomial", [1e-2, 2.5e-3, 6.25e-4], c=1.0, decay=3.0)
    ks = [r.k_star for r in rows]
    assert ks[1] == pytest.approx(2 * ks[0], abs=1.0)
    assert ks[2] == pytest.approx(2 * ks[1], abs=1.0)
    assert ratio_spread(rows) <= 1.2


def test_asymptotics_trivial_target():
    rows = run_blocksize_asymptotics("geometric", [0.6], c=1.0, decay=0.5)
    assert rows[0].k_star == 1  # k delta_k = 0.5 at k = 1 already meets 0.6


def test_asymptotics_validation():
    with pytest.raises(DomainError):
        run_blocksize_asymptotics("geometric", [1e-2, 1e-2])
    with pytest.raises(DomainError):
        run_blocksize_asymptotics("geometric", [-1.0])
    with pytest.raises(DomainError):
        run_blocksize_asymptotics("exponential", [1e-2])
    with pytest.raises(DomainError):
        run_blocksize_asymptotics("geometric", [1e-2], decay=1.0)
    with pytest.raises(DomainError):
        run_blocksize_asymptotics("polynomial", [1e-2], decay=1.0)
    with pytest.raises(DomainError):
        run_blocksize_asymptotics("geometric", [1e-2], c=0.0)


# ---------------------------------------------------------------------------
# CLI


def test_parse_x_grid_forms():
    assert parse_x_grid("0.5,1,2") == [0.5, 1.0, 2.0]
    assert parse_x_grid("1:3:0.5") == [1.0, 1.5, 2.0, 2.5, 3.0]
    assert parse_x_grid("2") == [2.0]
    import click

    with pytest.raises(click.BadParameter):
        parse_x_grid("1:0.5:1")
    with pytest.raises(click.BadParameter):
        parse_x_grid("abc")
    with pytest.raises(click.BadParameter):
        parse_x_grid("")


def test_cli_bounds_matches_library():
    runner = CliRunner()
    res = runner.invoke(
        main,
        ["bounds", "--theorem", "iid_eq1", "--n", "1000", "--x-grid", "1",
         "--sigma-sq", str(1.0 / 12.0)],
    )
    assert res.exit_code == 0
    assert repr(iid_bernstein_threshold(1000, 1.0 / 12.0, 1.0)) in res.output
    res = runner.invoke(
        main,
        ["bounds", "--theorem", "thm2", "--n", "1000", "--x-grid", "1",
         "--sigma-sq", str(doubling_sigma_sq(5)), "--k", "5"],
    )
    assert res.exit_code == 0
    assert repr(thm2_threshold(1000, doubling_sigma_sq(5), 5, 1.0)) in res.output


def test_cli_bounds_requires_theorem_inputs():
    runner = CliRunner()
    res = runner.invoke(main, ["bounds", "--theorem", "thm2", "--n", "10", "--x-grid", "1"])
    assert res.exit_code != 0


def test_cli_profile_writes_csv(tmp_path):
    out = tmp_path / "prof.csv"
    runner = CliRunner()
    res = runner.invoke(
        main, ["profile", "--model", "doubling-map", "--n", "8", "--out", str(out)]
    )
    assert res.exit_code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    prof = doubling_map_profile(8)
    assert len(rows) == 9
    assert float(rows[1][1]) == prof.at(1)


def test_cli_simulate_writes_csv(tmp_path):
    out = tmp_path / "traj.csv"
    runner = CliRunner()
    res = runner.invoke(
        main,
        ["simulate", "--model", "kernel-chain", "--kappa", "0.5", "--n", "20",
         "--seed", "4", "--out", str(out)],
    )
    assert res.exit_code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 21 and rows[0] == ["t", "x"]


def test_cli_estimate_variance(tmp_path):
    out = tmp_path / "var.csv"
    runner = CliRunner()
    res = runner.invoke(
        main,
        ["estimate-variance", "--model", "iid-uniform", "--k-grid", "1,2",
         "--reps", "200", "--seed", "3", "--threads", "1", "--out", str(out)],
    )
    assert res.exit_code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3
    assert rows[1][3] == "sigma_sq"
    assert abs(float(rows[1][4]) - 1.0 / 12.0) < 0.02


def test_cli_estimate_coupling_with_block_out(tmp_path):
    out = tmp_path / "coup.csv"
    block_out = tmp_path / "block.csv"
    runner = CliRunner()
    res = runner.invoke(
        main,
        ["estimate-coupling", "--model", "doubling-map", "--r-grid", "2,3",
         "--j-grid", "1", "--reps", "100", "--seed", "5", "--threads", "1",
         "--out", str(out), "--block-out", str(block_out)],
    )
    assert res.exit_code == 0
    with open(out, newline="") as fh:
        rows = list(csv.reader(fh))
    assert len(rows) == 3 and rows[1][2] == "r=2,j=1"
    with open(block_out, newline="") as fh:
        brows = list(csv.reader(fh))
    assert brows[0] == ["i", "x", "x_star", "dist"]
    assert len(brows) == 3  # r = 2 block


def test_cli_verify_pass_and_reference_exclusion(tmp_path):
    cfg = tmp_path / "cfg.json"
    report = tmp_path / "report.csv"
    cfg.write_text(
        json.dumps(
            {
                "model": "doubling-map",
                "n": 1000,
                "x_grid": [0.5, 1.0, 2.0],
                "theorem": "thm2",
                "reps": 500,
                "base_seed": 123,
                "out": str(report),
            }
        )
    )
    runner = CliRunner()
    res = runner.invoke(main, ["verify", "--config", str(cfg), "--threads", "1"])
    # the x = 2 reference row fails, but reference rows never set the exit code
    assert res.exit_code == 0, res.output
    assert "reference curve" in res.output
    assert report.exists()
    with open(report, newline="") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == REPORT_CSV_HEADER and len(rows) == 7


def test_cli_verify_fails_on_violated_bound(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text(
        json.dumps(
            {
                "model": "doubling-map",
                "n": 1000,
                "x_grid": [2.0],
                "theorem": "iid_eq1",
                "reps": 1000,
                "base_seed": 77,
            }
        )
    )
    runner = CliRunner()
    res = runner.invoke(
        main,
        ["verify", "--config", str(cfg), "--out", str(tmp_path / "r.csv"), "--threads", "1"],
    )
    # the iid formula is not a valid bound for the doubling map at x = 2
    assert res.exit_code == 1
    # a missing output path is a usage error instead
    res = runner.invoke(main, ["verify", "--config", str(cfg), "--threads", "1"])
    assert res.exit_code == 2


def test_cli_verify_rejects_bad_config_cleanly(tmp_path):
    cfg = tmp_path / "cfg.json"
    cfg.write_text('{"model": "doubling-map", "bogus": 1}')
    runner = CliRunner()
    res = runner.invoke(main, ["verify", "--config", str(cfg)])
    assert res.exit_code == 1
    # config rejections come back as CLI errors, not tracebacks
    assert "unknown config key 'bogus'" in res.output
    assert "Traceback" not in res.output


def test_cli_asymptotics():
    runner = CliRunner()
    res = runner.invoke(
        main,
        ["asymptotics", "--family", "geometric", "--decay", "0.5", "--c", str(4.0 / 9.0),
         "--targets", "1e-2,1e-4,1e-6,1e-8"],
    )
    assert res.exit_code == 0
    lines = [l for l in res.output.splitlines() if l]
    assert any("ratio" in l for l in lines)


def test_cli_rejects_bad_x_grid():
    runner = CliRunner()
    res = runner.invoke(
        main, ["bounds", "--theorem", "iid_eq1", "--n", "10", "--x-grid", "oops",
               "--sigma-sq", "0.1"],
    )
    assert res.exit_code == 2
