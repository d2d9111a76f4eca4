import io

import numpy as np
import pytest

from egalassign import gen
from egalassign.cli import dispatch
from egalassign.egal_lp import solve_oeef, solve_oev
from egalassign.experiment import read_csv
from egalassign.mechanisms import ps, rsd_exact, rsd_sampled
from egalassign.model import format_matrix, parse_matrix


def run(*argv):
    out, err = io.StringIO(), io.StringIO()
    code = dispatch(list(map(str, argv)), out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, name, text):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_solve_disjoint_profile(tmp_path):
    p = write(tmp_path, "v.txt", "2 2\n1 0\n0 1\n")
    code, out, _ = run("solve", p)
    assert code == 0
    first, rest = out.split("\n", 1)
    assert first == "lambda: 1.0"
    assert np.allclose(parse_matrix(rest), np.eye(2))


def test_solve_matches_library(tmp_path):
    v = gen.sample_profile(4, 5, 0.6, "exponential", np.random.default_rng(1))
    p = write(tmp_path, "v.txt", format_matrix(v))
    for flag, fn in (([], solve_oev), (["--envy-free"], solve_oeef)):
        sol = fn(v)
        _, out, _ = run("solve", p, *flag)
        assert out == f"lambda: {sol.value!r}\n" + format_matrix(sol.allocation)


def test_run_mechanism_ps_identical_preferences(tmp_path):
    p = write(tmp_path, "v.txt", "3 3\n3 2 1\n3 2 1\n3 2 1\n")
    code, out, err = run("run-mechanism", "ps", p)
    assert code == 0
    assert np.allclose(parse_matrix(out), 1 / 3, atol=1e-15)
    assert "mechanism=ps" in err


def test_run_mechanism_rsd_matches_library(tmp_path):
    v = gen.sample_profile(4, 4, 0.5, "borda", np.random.default_rng(2))
    p = write(tmp_path, "v.txt", format_matrix(v))
    _, out, err = run("run-mechanism", "rsd", p)
    assert out == format_matrix(rsd_exact(v).allocation)
    assert "exact=True" in err
    _, out, err = run("run-mechanism", "rsd", p, "--samples", 500, "--seed", 9)
    assert out == format_matrix(rsd_sampled(v, 500, 9).allocation)
    assert "samples=500 seed=9" in err


def test_run_mechanism_usage_errors(tmp_path):
    p = write(tmp_path, "v.txt", "2 2\n1 0\n0 1\n")
    code, out, err = run("run-mechanism", "rsd", p, "--samples", 10)
    assert code == 2 and out == "" and "usage:" in err
    code, _, err = run("run-mechanism", "ps", p, "--seed", 1, "--samples", 3)
    assert code == 2
    code, _, _ = run("run-mechanism", "borda", p)
    assert code == 2


def test_rsd_over_cap_is_an_error(tmp_path):
    p = write(tmp_path, "v.txt", format_matrix(np.ones((9, 2))))
    code, out, err = run("run-mechanism", "rsd", p)
    assert code == 1 and out == "" and "rsd_sampled" in err


def test_check_ps_output(tmp_path):
    v = gen.sample_profile(5, 4, 0.7, "borda", np.random.default_rng(3))
    pv = write(tmp_path, "v.txt", format_matrix(v))
    pa = write(tmp_path, "p.txt", format_matrix(ps(v).allocation))
    code, out, _ = run("check", pv, pa)
    assert code == 0
    assert "sd_envy_free: true" in out.splitlines()
    assert "feasible: true" in out.splitlines()


def test_check_reports_envy(tmp_path):
    pv = write(tmp_path, "v.txt", "2 2\n1 0\n1 0\n")
    pa = write(tmp_path, "p.txt", "2 2\n1 0\n0 1\n")
    code, out, _ = run("check", pv, pa)
    assert code == 0
    assert "envy_free: false" in out.splitlines()


def test_missing_file_and_parse_error(tmp_path):
    missing = tmp_path / "nope.txt"
    code, _, err = run("solve", missing)
    assert code == 1 and str(missing) in err
    bad = write(tmp_path, "bad.txt", "2 2\n1 0\n0 x\n")
    code, _, err = run("solve", bad)
    assert code == 1 and "line 3" in err


def test_usage_errors():
    assert run()[0] == 2
    assert run("solve")[0] == 2
    assert run("gen", "--n", 3, "--m", 3, "--phi", 0.5, "--model", "borda")[0] == 2
    assert run("solve", "x", "--bogus")[0] == 2
    assert run("heatmap", "x.csv")[0] == 2
    code, _, err = run("solve", "x", "--bogus")
    assert "usage: egalassign" in err and "--bogus" in err
    code, out, _ = run("--help")
    assert code == 0 and "run-mechanism" in out


def test_gen_matches_library_and_feeds_solve(tmp_path):
    code, out, _ = run("gen", "--n", 4, "--m", 3, "--phi", 0.4, "--model", "exponential", "--seed", 11)
    assert code == 0
    v = gen.sample_profile(4, 3, 0.4, "exponential", np.random.default_rng(11))
    assert out == format_matrix(v)
    p = write(tmp_path, "g.txt", out)
    assert run("solve", p)[0] == 0
    assert run("run-mechanism", "rsd", p)[0] == 0


@pytest.mark.parametrize("argv, expected", [
    (["fav-share", "--n", 5], gen.fav_share_profile(5)),
    (["fav-share", "--n", 3, "--eps", 0.1], gen.fav_share_profile(3, 0.1)),
    (["lower-bound", "--n1", 4], gen.lower_bound_profile(4)),
    (["lower-bound", "--n1", 4, "--variant", 3], gen.lower_bound_variant(4, 3)),
    (["cyclic", "--n", 4], gen.cyclic_ordinal_profile(4)),
])
def test_adversarial_closure(tmp_path, argv, expected):
    code, out, _ = run("adversarial", *argv)
    assert code == 0 and out == format_matrix(expected)
    p = write(tmp_path, "adv.txt", out)
    code, sol, _ = run("solve", p)
    assert code == 0
    code, alloc, _ = run("run-mechanism", "ps", p)
    assert code == 0
    pa = write(tmp_path, "ps.txt", alloc)
    code, rep, _ = run("check", p, pa)
    assert code == 0 and "sd_envy_free: true" in rep


def test_adversarial_bad_parameter():
    code, _, err = run("adversarial", "lower-bound", "--n1", 5)
    assert code == 1 and "perfect square" in err


def test_experiment_and_heatmap(tmp_path):
    out_csv = tmp_path / "rec.csv"
    cfg = write(tmp_path, "grid.cfg", f"""agents = 2, 3
objects = 2, 3
phis = 0.0, 1.0
mechanisms = ps
instances_per_cell = 2
output_path = {out_csv}
""")
    code, out, err = run("experiment", "--config", cfg)
    assert code == 0 and out.strip() == str(out_csv)
    assert len(read_csv(out_csv)) == 2 * 2 * 2 * 2 * 2
    code, hm, _ = run("heatmap", tmp_path / "rec_agg.csv", "--metric", "min", "--model", "borda")
    assert code == 0
    lines = hm.splitlines()
    assert lines[0] == "min aar  model=borda  mechanism=ps"
    assert lines[2].split() == ["0.00", "1.000", "1.000"]
    # a records CSV is aggregated on the fly
    assert run("heatmap", out_csv, "--metric", "mean")[1].count("mean aar") == 2


def test_experiment_requires_output_path(tmp_path):
    cfg = write(tmp_path, "grid.cfg", "agents = 2\nobjects = 2\nphis = 0.5\n")
    assert run("experiment", "--config", cfg)[0] == 2
    bad = write(tmp_path, "bad.cfg", "agents = 2\nobjects = two\n")
    code, _, err = run("experiment", "--config", bad)
    assert code == 1 and "line 2" in err
