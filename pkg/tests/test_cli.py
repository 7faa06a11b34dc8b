import json

import numpy as np
import pytest

import radialgas.cli as cli
from radialgas.cli import ConfigError, main, parse_config
from radialgas.family import FamilyAborted, FamilyReport
from radialgas.solver import RunAborted

MINIMAL = """\
[data]
source = "constant"
"""

SMALL_RUN = """\
[data]
source = "constant"

[run]
a = 0.1
k = 2
N = 128
T = 0.05
"""


def _write(tmp_path, text, name="cfg.toml"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


# ---------------------------------------------------------------------------
# config parsing


def test_minimal_config_defaults(tmp_path):
    cfg = parse_config(_write(tmp_path, MINIMAL))
    assert cfg.N == 1024
    assert cfg.cfl == 0.4
    assert cfg.mode == "strict"
    assert cfg.T == 0.5
    assert (cfg.a, cfg.k) == (0.1, 4)
    assert cfg.source == "constant"
    assert cfg.family is None
    assert cfg.output_times is None
    assert len(cfg.config_sha256) == 64


def test_gamma_one_rejected(tmp_path):
    path = _write(tmp_path, MINIMAL + "\n[fluid]\ngamma = 1.0\n")
    with pytest.raises(ConfigError, match="gamma must exceed 1"):
        parse_config(path)


def test_bulk_viscosity_boundary_accepted(tmp_path):
    # lam = -2 mu / n exactly sits on the closed admissibility boundary
    lam = -(2.0 * 0.1 / 3.0)
    path = _write(tmp_path, MINIMAL + f"\n[fluid]\nmu = 0.1\nlam = {lam!r}\n")
    cfg = parse_config(path)
    assert cfg.params.lam == lam
    path2 = _write(tmp_path, MINIMAL + f"\n[fluid]\nmu = 0.1\nlam = {lam - 1e-3!r}\n",
                   name="below.toml")
    with pytest.raises(ConfigError, match="bulk viscosity"):
        parse_config(path2)


def test_errors_are_aggregated(tmp_path):
    text = """\
[data]
source = "mystery"

[fluid]
gamma = 0.9
kappa = -1.0

[run]
cfl = 7.0
bogus = true

[nonsense]
x = 1
"""
    with pytest.raises(ConfigError) as exc_info:
        parse_config(_write(tmp_path, text))
    msgs = "\n".join(exc_info.value.problems)
    assert len(exc_info.value.problems) >= 5
    for needle in ("mystery", "gamma", "kappa", "cfl", "bogus", "nonsense"):
        assert needle in msgs


def test_invalid_toml_rejected(tmp_path):
    with pytest.raises(ConfigError, match="parseable"):
        parse_config(_write(tmp_path, "run = [unclosed\n"))


def test_csv_source_requires_existing_path(tmp_path):
    with pytest.raises(ConfigError, match="requires data.path"):
        parse_config(_write(tmp_path, '[data]\nsource = "csv"\n'))
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(_write(tmp_path, '[data]\nsource = "csv"\npath = "nope.csv"\n'))

    data = tmp_path / "data.csv"
    r = np.linspace(0.0, 4.0, 65)
    with open(data, "w") as fh:
        fh.write("r,rho,u,e\n")
        for ri in r:
            fh.write(f"{ri},1.0,0.0,1.0\n")
    cfg = parse_config(
        _write(tmp_path, f'[data]\nsource = "csv"\npath = "{data}"\n', name="ok.toml")
    )
    base = cli._load_base_data(cfg)
    assert base.r.size == 65
    # the manifest digest must track the data file, not just the config
    d1 = cli._data_digest(cfg)
    with open(data, "a") as fh:
        fh.write("")  # no change, digest stable
    assert cli._data_digest(cfg) == d1


def test_output_times_validated(tmp_path):
    with pytest.raises(ConfigError, match="output_times"):
        parse_config(_write(tmp_path, SMALL_RUN + "output_times = [0.0, 0.2]\n"))
    cfg = parse_config(
        _write(tmp_path, SMALL_RUN + "output_times = [0.0, 0.05]\n", name="ok.toml")
    )
    assert cfg.output_times == (0.0, 0.05)


def test_family_section_parsed(tmp_path):
    text = SMALL_RUN + "\n[family]\na_list = [0.1, 0.2]\nk_list = [2, 4]\nworkers = 2\n"
    cfg = parse_config(_write(tmp_path, text))
    assert cfg.family.a_list == (0.1, 0.2)
    assert cfg.family.k_list == (2, 4)
    assert cfg.family.workers == 2
    bad = SMALL_RUN + "\n[family]\na_list = [0.2, 0.1]\nk_list = [2]\n"
    with pytest.raises(ConfigError, match="sorted"):
        parse_config(_write(tmp_path, bad, name="bad.toml"))


# ---------------------------------------------------------------------------
# run subcommand


def test_run_produces_outputs(tmp_path):
    cfg_path = _write(tmp_path, SMALL_RUN)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    run_dirs = list(out.iterdir())
    assert len(run_dirs) == 1
    files = sorted(p.name for p in run_dirs[0].iterdir())
    assert files == [
        "entropy.csv",
        "eulerian.csv",
        "lagrangian.csv",
        "manifest.json",
        "monitors.json",
    ]
    manifest = json.loads((run_dirs[0] / "manifest.json").read_text())
    assert manifest["kind"] == "run"
    assert manifest["data_source"] == "constant"
    assert run_dirs[0].name == f"run-{manifest['run_id']}"
    assert "timestamp" not in manifest
    monitors = json.loads((run_dirs[0] / "monitors.json").read_text())
    assert all(m["satisfied"] for m in monitors["report"]["monitors"])
    header = (run_dirs[0] / "lagrangian.csv").read_text().splitlines()[0]
    assert header == "t,x,v,u,e,r"


def test_rerun_is_byte_identical(tmp_path):
    cfg_path = _write(tmp_path, SMALL_RUN)
    out = tmp_path / "out"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    run_dir = next(out.iterdir())
    before = {p.name: p.read_bytes() for p in run_dir.iterdir()}
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
    after = {p.name: p.read_bytes() for p in run_dir.iterdir()}
    assert before == after


def test_missing_config_exits_2(tmp_path, capsys):
    assert main(["run", "--config", str(tmp_path / "absent.toml")]) == 2
    assert "configuration errors" in capsys.readouterr().err


def test_invalid_config_exits_2(tmp_path, capsys):
    cfg_path = _write(tmp_path, MINIMAL + "\n[fluid]\ngamma = 0.5\n")
    assert main(["run", "--config", str(cfg_path)]) == 2
    assert "gamma" in capsys.readouterr().err


def test_unwritable_out_dir_exits_2_before_compute(tmp_path, capsys, monkeypatch):
    blocker = tmp_path / "file"
    blocker.write_text("not a directory")

    def must_not_run(*args, **kwargs):
        raise AssertionError("solver started despite failed pre-flight")

    monkeypatch.setattr(cli, "run", must_not_run)
    cfg_path = _write(tmp_path, SMALL_RUN)
    code = main(["run", "--config", str(cfg_path), "--out", str(blocker / "sub")])
    assert code == 2
    assert "not writable" in capsys.readouterr().err


def test_run_aborted_exits_3(tmp_path, capsys, monkeypatch):
    def aborting_run(*args, **kwargs):
        raise RunAborted("step collapse")

    monkeypatch.setattr(cli, "run", aborting_run)
    cfg_path = _write(tmp_path, SMALL_RUN)
    assert main(["run", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 3
    assert "step collapse" in capsys.readouterr().err


def test_monitor_violation_exit_code(tmp_path, monkeypatch):
    def red_report(traj, C0, seed=0):
        return {"monitors": [
            {"monitor": "synthetic", "satisfied": False, "margin": -1.0}
        ]}

    monkeypatch.setattr(cli, "standard_monitor_report", red_report)
    cfg_path = _write(tmp_path, SMALL_RUN)
    out = tmp_path / "o"
    assert main(["run", "--config", str(cfg_path), "--out", str(out)]) == 4
    # exploratory mode reports but does not gate
    assert main(["run", "--config", str(cfg_path), "--out", str(out),
                 "--mode", "exploratory"]) == 0


# ---------------------------------------------------------------------------
# family subcommand


def test_family_produces_tree(tmp_path):
    text = SMALL_RUN + "\n[family]\na_list = [0.1, 0.2]\nk_list = [2]\n"
    cfg_path = _write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["family", "--config", str(cfg_path), "--out", str(out)]) == 0
    fam_dir = next(out.iterdir())
    assert fam_dir.name.startswith("family-")
    names = sorted(p.name for p in fam_dir.iterdir())
    assert names == ["a0.1_k2", "a0.2_k2", "family.json", "manifest.json"]
    for sub in ("a0.1_k2", "a0.2_k2"):
        assert sorted(p.name for p in (fam_dir / sub).iterdir()) == [
            "paths.csv",
            "summary.json",
        ]
    payload = json.loads((fam_dir / "family.json").read_text())
    assert payload["complete"] is True
    assert len(payload["runs"]) == 2
    # surfaces are not duplicated inside the JSON report
    assert "path_families" not in payload


def test_family_requires_section(tmp_path, capsys):
    cfg_path = _write(tmp_path, SMALL_RUN)
    assert main(["family", "--config", str(cfg_path), "--out", str(tmp_path / "o")]) == 2
    assert "[family] section" in capsys.readouterr().err


def test_family_abort_writes_partial_and_exits_3(tmp_path, capsys, monkeypatch):
    partial = FamilyReport(runs=(), distance_matrix=(), vacuum=(), holder=(),
                           complete=False, error="member aborted")

    def aborting_family(*args, **kwargs):
        raise FamilyAborted("member (a=0.1, k=2) aborted", partial)

    monkeypatch.setattr(cli, "run_family", aborting_family)
    text = SMALL_RUN + "\n[family]\na_list = [0.1]\nk_list = [2]\n"
    cfg_path = _write(tmp_path, text)
    out = tmp_path / "o"
    assert main(["family", "--config", str(cfg_path), "--out", str(out)]) == 3
    assert "partial report" in capsys.readouterr().err
    fam_dir = next(out.iterdir())
    payload = json.loads((fam_dir / "family.json").read_text())
    assert payload["complete"] is False


def test_family_rerun_byte_identical(tmp_path):
    text = SMALL_RUN + "\n[family]\na_list = [0.1, 0.2]\nk_list = [2]\n"
    cfg_path = _write(tmp_path, text)
    out = tmp_path / "out"
    assert main(["family", "--config", str(cfg_path), "--out", str(out)]) == 0
    fam_dir = next(out.iterdir())
    before = {
        str(p.relative_to(fam_dir)): p.read_bytes()
        for p in fam_dir.rglob("*") if p.is_file()
    }
    assert main(["family", "--config", str(cfg_path), "--out", str(out)]) == 0
    after = {
        str(p.relative_to(fam_dir)): p.read_bytes()
        for p in fam_dir.rglob("*") if p.is_file()
    }
    assert before == after


# ---------------------------------------------------------------------------
# check-weakform and scalars


def test_check_weakform_writes_table(tmp_path, capsys):
    text = """\
[data]
source = "gaussian_bump"

[run]
a = 0.1
k = 4
N = 128
T = 0.1
"""
    cfg_path = _write(tmp_path, text)
    out = tmp_path / "w"
    assert main(["check-weakform", "--config", str(cfg_path), "--out", str(out)]) == 0
    captured = capsys.readouterr().out
    for eq in ("continuity", "momentum", "energy"):
        assert eq in captured
    lines = (out / "weakform_residuals.csv").read_text().splitlines()
    assert lines[0] == "eq,phi_id,N,residual"
    # 3 resolutions per (eq, test function) row group
    assert (len(lines) - 1) % 3 == 0 and len(lines) > 1


def test_check_weakform_needs_room_for_refinement(tmp_path, capsys):
    cfg_path = _write(tmp_path, SMALL_RUN.replace("N = 128", "N = 16"))
    assert main(["check-weakform", "--config", str(cfg_path),
                 "--out", str(tmp_path / "w")]) == 2
    assert "refinement" in capsys.readouterr().err


def test_scalars_forward_and_inverse(capsys):
    assert main(["scalars", "--fn", "psi", "1.0"]) == 0
    assert float(capsys.readouterr().out.strip()) == 0.0
    assert main(["scalars", "--fn", "psi", "--inverse", "left", "0.5"]) == 0
    z = float(capsys.readouterr().out.strip())
    assert main(["scalars", "--fn", "psi", repr(z)]) == 0
    assert abs(float(capsys.readouterr().out.strip()) - 0.5) < 1e-12


def test_scalars_rejects_bad_domain(capsys):
    assert main(["scalars", "--fn", "psi", "--", "-1.0"]) == 2
    assert "scalars" in capsys.readouterr().err
