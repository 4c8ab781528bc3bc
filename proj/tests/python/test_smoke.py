import json

import numpy as np
import pytest
from scipy.linalg import solve_triangular, toeplitz
from scipy.special import erfc

import qttv


def lower_toeplitz(col):
    return np.tril(toeplitz(col))


def test_dense_inverse_matches_triangular_solve():
    a = qttv.system_generator(0.5, -1.0, 10.0, 8)
    b, info = qttv.invert(a, method="dense_dc")
    e0 = np.zeros_like(a)
    e0[0] = 1.0
    want = solve_triangular(lower_toeplitz(a), e0, lower=True)
    assert np.linalg.norm(b - want) <= 1e-12 * np.linalg.norm(want)
    assert info["method"] == "dense_dc"


def test_qtt_inverse_round_trip():
    a = qttv.system_generator(0.3, -1.0, 10.0, 12)
    tt = qttv.TTVector.from_dense(a, tol=1e-12)
    b, info = qttv.invert(tt, method="qtt_dc_conv", tol=1e-10)
    assert isinstance(b, qttv.TTVector)
    assert info["max_rank"] >= b.max_rank
    res = qttv.causal_convolve(a, b.to_dense())
    res[0] -= 1.0
    assert np.linalg.norm(res) < 1e-8
    assert 1.0 <= qttv.effective_rank(b) <= b.max_rank


def test_solve_against_closed_form():
    # lambda = 0, m = -1: y(t) = exp(t) erfc(sqrt t) for alpha = 1/2.
    y, info = qttv.solve(0.5, -1.0, 1.0, 10.0, 10, forcing=0.0, method="dense_dc")
    t = np.arange(1, 1025) * (10.0 / 1024)
    assert np.max(np.abs(y - np.exp(t) * erfc(np.sqrt(t)))) < 5e-3
    assert info["residual"] < 1e-12
    ya = qttv.analytic_constant_forcing(0.5, -1.0, 1.0, 0.0, 10.0, 10)
    assert np.allclose(ya, np.exp(t) * erfc(np.sqrt(t)), rtol=1e-10)


def test_mittag_leffler_and_errors():
    value, err, reliable = qttv.mittag_leffler(1.0, 1.0, 1.0)
    assert value == pytest.approx(np.e, rel=1e-14)
    assert reliable
    assert not qttv.mittag_leffler(0.5, 1.0, -60.0)[2]
    with pytest.raises(ValueError):
        qttv.invert(np.ones(3), method="dense_dc")
    with pytest.raises(qttv.RankLimitExceeded):
        qttv.invert(qttv.TTVector.from_dense(qttv.system_generator(0.5, -1.0, 10.0, 10)), max_rank=2)
    with pytest.raises(ValueError):
        qttv.invert(np.ones(4), method="no_such_method")


def test_cli_entry(tmp_path):
    out = tmp_path / "inv.csv"
    code, stdout, stderr = qttv.run_cli(
        ["invert", "--method", "dense_dc", "--log2n", "8", "--reps", "1", "--out", str(out)])
    assert code == 0, stderr
    assert json.loads(stdout)["rows"] == 1
    assert out.read_text().startswith("# schema: qttv-invert v1")
    code, _, stderr = qttv.run_cli(["solve", str(tmp_path / "missing.json"), "--out", str(out)])
    assert code == 2
    assert json.loads(stderr)["error"]["kind"] == "input"
