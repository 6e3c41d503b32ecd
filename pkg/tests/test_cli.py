import csv
import io
import json
import math

import numpy as np
import pytest

from chainqed.cli import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, main, read_config
from chainqed.core import DriveConfig, EmitterParams
from chainqed.ensemble import combined_chain
from chainqed.errors import ConfigError
from chainqed.observables import antibunching_point, g2_zero


def run_cli(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main([*argv, "--out", str(out)])
    assert code == EXIT_OK
    return out.read_bytes()


def table(data: bytes):
    text = data.decode()
    meta = {}
    body = []
    for line in text.splitlines():
        if line.startswith("#"):
            if "=" in line:
                k, v = line[1:].strip().split("=", 1)
                meta[k] = v
        else:
            body.append(line)
    rows = list(csv.reader(io.StringIO("\n".join(body))))
    return meta, rows[0], [[float(x) for x in r] for r in rows[1:]]


def test_g2_trace_has_zero_delay_row(tmp_path):
    meta, cols, rows = table(run_cli(tmp_path, "single", "--beta", "0.01", "--observable", "g2_trace"))
    assert cols == ["tau_gamma", "g2"]
    zero = [r for r in rows if r[0] == 0.0]
    assert zero == [[0.0, 0.0]]
    assert all(abs(r[0]) <= 10.0 for r in rows)


def test_sweep_minimum_matches_library(tmp_path):
    meta, cols, rows = table(run_cli(tmp_path, "sweep", "--geometry", "waveguide", "--beta", "0.01",
                                     "--n", "1:300"))
    n_best, _ = antibunching_point(EmitterParams(0.01), DriveConfig.waveguide(0.01), range(1, 301))
    assert int(meta["note.minimum_n"]) == n_best
    assert int(min(rows, key=lambda r: r[1])[0]) == n_best


def test_sweep_sorted_and_deduplicated(tmp_path):
    _, _, rows = table(run_cli(tmp_path, "sweep", "--beta", "0.01", "--n", "7,3,5,3,1"))
    assert [r[0] for r in rows] == [1, 3, 5, 7]


def test_antibragg_spectrum_column_is_formula(tmp_path):
    n = 400
    _, cols, rows = table(run_cli(tmp_path, "ensemble", "--geometry", "antibragg", "--beta", "0.01",
                                  "--n", str(n), "--observable", "psi_incoh_spectrum"))
    rows = np.array(rows)
    w = rows[:, 0]
    b = 0.01
    t2 = 1 - 4 * b * (1 - b) / (1 + 4 * w**2)
    single = 4 * b**2 / (1 + 4 * w**2) / b**2
    expected = single * (1 - t2**n) / (1 - t2)
    assert np.allclose(rows[:, 3], expected, rtol=1e-12)
    at_zero = rows[w == 0.0, 3][0]
    assert at_zero == pytest.approx(1 / (b * (1 - b)), rel=1e-3)


def test_antibragg_moderate_chain_below_plateau(tmp_path):
    _, _, rows = table(run_cli(tmp_path, "ensemble", "--geometry", "antibragg", "--n", "40",
                               "--observable", "psi_incoh_spectrum"))
    at_zero = [r[3] for r in rows if r[0] == 0.0][0]
    assert at_zero == pytest.approx((1 - 0.9604**40) / (0.01 * 0.99), rel=1e-12)


@pytest.mark.parametrize("fmt", ["csv", "json"])
def test_output_reruns_byte_identically(tmp_path, fmt):
    first = run_cli(tmp_path, "ensemble", "--geometry", "combined", "--beta", "0.02", "--ratio", "1.5",
                    "--n", "12", "--format", fmt, "--observable", "psi_incoh_spectrum",
                    "--omega-max", "1", name=f"a.{fmt}")
    if fmt == "csv":
        again = run_cli(tmp_path, "--config", str(tmp_path / "a.csv"), name="b.csv")
    else:
        meta = json.loads(first)["metadata"]
        cfg = tmp_path / "cfg.txt"
        cfg.write_text("".join(f"{k}={v}\n" for k, v in meta.items() if not k.startswith("note.")))
        again = run_cli(tmp_path, "--config", str(cfg), name="b.json")
    assert again == first


def test_every_subcommand_round_trips(tmp_path):
    cases = [("single", "--drive", "combined", "--ratio", "2", "--observable", "squeezing", "--theta", "0.3"),
             ("sweep", "--geometry", "bragg", "--n", "1:20:3", "--observable", "psi_incoh_zero"),
             ("mc", "--n", "3", "--samples", "2000", "--seed", "11")]
    for k, argv in enumerate(cases):
        first = run_cli(tmp_path, *argv, name=f"{k}.csv")
        assert run_cli(tmp_path, "--config", str(tmp_path / f"{k}.csv"), name=f"{k}b.csv") == first


def test_flags_override_file(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("command=single\nbeta=0.05\ndelta=1.0\n")
    meta, _, _ = table(run_cli(tmp_path, "--config", str(cfg), "single", "--delta", "0.5"))
    assert meta["beta"] == "0.05" and meta["delta"] == "0.5"


def test_lf_line_endings(tmp_path):
    data = run_cli(tmp_path, "single")
    assert b"\r" not in data and data.endswith(b"\n")


@pytest.mark.parametrize("argv,field", [
    (["single", "--beta", "1.5"], "beta"),
    (["ensemble", "--geometry", "sideways"], "geometry"),
    (["sweep", "--n", "5:1"], "n_range"),
    (["single", "--grid-points", "1000"], "grid_points"),
    (["single", "--omega", "0"], "omega"),
])
def test_config_errors_exit_2_naming_field(argv, field, capsys):
    assert main(argv) == EXIT_CONFIG
    assert field in capsys.readouterr().err


def test_unknown_key_is_line_addressed(tmp_path):
    cfg = tmp_path / "c.txt"
    cfg.write_text("command=single\n\nbeta=0.01\ncolour=blue\n")
    with pytest.raises(ConfigError, match=r"c\.txt:4"):
        read_config(str(cfg))
    assert main(["--config", str(cfg)]) == EXIT_CONFIG


def test_detuned_external_chain_is_unsupported(capsys):
    assert main(["ensemble", "--geometry", "bragg", "--delta", "1", "--n", "3"]) == EXIT_CONFIG


def test_numerical_guards_exit_3(capsys, tmp_path):
    code = main(["ensemble", "--geometry", "waveguide", "--n", "50", "--grid-width", "1",
                 "--grid-points", "1024", "--out", str(tmp_path / "x.csv")])
    assert code == EXIT_NUMERICAL
    assert "grid-width" in capsys.readouterr().err
    code = main(["ensemble", "--geometry", "bragg", "--n", "3", "--lattice-spacing", "0.3",
                 "--out", str(tmp_path / "y.csv")])
    assert code == EXIT_NUMERICAL


def test_zero_power_written_as_inf(tmp_path):
    meta, _, rows = table(run_cli(tmp_path, "ensemble", "--geometry", "antibragg", "--n", "4"))
    assert math.isinf(rows[0][1])
    assert meta["note.explanation"] == "coherent power is zero"


def test_mc_seed_reproducible(tmp_path):
    a = run_cli(tmp_path, "mc", "--n", "4", "--samples", "5000", "--seed", "3", name="a.csv")
    b = run_cli(tmp_path, "mc", "--n", "4", "--samples", "5000", "--seed", "3", name="b.csv")
    c = run_cli(tmp_path, "mc", "--n", "4", "--samples", "5000", "--seed", "4", name="c.csv")
    assert a == b and table(a)[2] != table(c)[2]


def test_combined_sweep_flags_unphysical_coupling(tmp_path):
    meta, _, _ = table(run_cli(tmp_path, "sweep", "--geometry", "combined", "--beta", "0.03",
                               "--ratio", "5", "--n", "1:40"))
    assert "beta'(n)>=1" in meta["flags"]


@pytest.fixture(scope="module")
def figures(tmp_path_factory):
    out = tmp_path_factory.mktemp("figs")
    for fig in ("fig5", "fig9", "figB1"):
        assert main(["figure", fig, "--out", str(out)]) == EXIT_OK
    return out


def test_fig5_two_emitters(figures):
    meta, _, rows = table((figures / "fig5.csv").read_bytes())
    assert meta["defaults_version"] == "1"
    assert dict((int(n), g) for n, g in rows)[2] == pytest.approx(0.25, abs=0.02)


def test_figB1_waveguide_dip(figures):
    _, cols, rows = table((figures / "figB1_b.csv").read_bytes())
    n_dip = int(min(rows, key=lambda r: r[cols.index("g2")])[0])
    assert abs(n_dip - 150) <= 5


def test_fig9_minima_match_library(figures):
    _, _, rows = table((figures / "fig9.csv").read_bytes())
    for beta, ratio in [(0.01, 2.0), (0.01, 10.0), (0.03, 5.0)]:
        curve = [r for r in rows if r[0] == beta and r[1] == ratio]
        n_csv = int(min(curve, key=lambda r: r[3])[2])
        p = EmitterParams(beta)
        values = [g2_zero(combined_chain(p, DriveConfig.combined(0.01, ratio, n))) for n in range(1, 61)]
        assert n_csv == 1 + int(np.argmin(values))


def test_unknown_figure_is_config_error(capsys):
    assert main(["figure", "fig99"]) == EXIT_CONFIG
