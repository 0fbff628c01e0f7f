import json

import pytest

import fictsolve


def test_parse_levels():
    assert fictsolve.parse_levels("3..5") == [3, 4, 5]


def test_normalize_fills_defaults():
    cfg = json.loads(fictsolve.normalize_config(json.dumps({"experiment": "spectrum", "levels": [3]})))
    assert cfg["problem"] == "poisson"
    assert cfg["gammas"] == [10.0]


def test_bad_config_raises():
    with pytest.raises(fictsolve.ConfigError):
        fictsolve.normalize_config(json.dumps({"experiment": "stokes-solve", "precond": "bfbt"}))
    with pytest.raises(ValueError):
        fictsolve.normalize_config(json.dumps({"no_such_key": 1}))


def test_sparsity_counts():
    c = fictsolve.sparsity_counts(3, 33)
    assert (c["n"], c["m"], c["l"]) == (578, 81, 66)
    assert c["A_GD"] == 12228


def test_mass_equivalence():
    lo, hi = fictsolve.mass_equivalence(16)
    assert lo == pytest.approx(1.0)
    assert hi == pytest.approx(3.0)


def test_poisson_spectrum_improves_with_gamma():
    cases = fictsolve.spectrum({"problem": "poisson", "levels": [3], "facets": 8, "gammas": [1.0, 100.0]})
    assert len(cases) == 2
    assert cases[1]["lambda_min_pos"] > cases[0]["lambda_min_pos"]
    for c in cases:
        assert max(abs(z.imag) for z in c["eigenvalues"]) < 1e-8
        assert max(z.real for z in c["eigenvalues"]) <= 1 + 1e-8


def test_run_writes_artifacts(tmp_path):
    out = tmp_path / "run"
    status, log = fictsolve.run({"experiment": "poisson-solve", "levels": [3, 4], "out": str(out)})
    assert status == 0
    summary = json.loads((out / "summary.json").read_text())
    assert summary
    assert (out / "results.csv").read_text().startswith("level")
    assert (out / "config.json").exists()
