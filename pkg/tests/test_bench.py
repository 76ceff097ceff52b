from __future__ import annotations

import io

import pytest

from cyltri.bench import CSV_HEADER, EXPERIMENTS, BenchConfig, read_csv, rows_to_csv, run_benchmark, write_csv
from cyltri.errors import InvalidConfig

SMALL = BenchConfig(trials=2, n_lines=(4,), sigmas=(0.0, 0.01), views=(2, 3), degeneracy_sigmas=(1e-4,))


def test_header():
    text = rows_to_csv([])
    assert text == ",".join(CSV_HEADER) + "\n"
    assert CSV_HEADER == (
        "experiment", "seed", "n_lines", "sigma", "method", "center_error", "radius_error",
        "frobenius_error", "conic_class", "runtime_us", "n_solutions",
    )


@pytest.mark.parametrize("experiment", EXPERIMENTS)
def test_each_experiment_runs_and_is_deterministic(experiment):
    cfg = BenchConfig(**{**SMALL.__dict__, "trials": 1})
    a = rows_to_csv(run_benchmark(experiment, cfg))
    b = rows_to_csv(run_benchmark(experiment, cfg))
    assert a == b
    rows = read_csv(a)
    assert rows and all(r["experiment"] == experiment for r in rows)
    assert "\r" not in a


def test_row_counts():
    assert len(list(run_benchmark("noise_sweep", SMALL))) == 1 * 2 * 2
    assert len(list(run_benchmark("method_comparison", SMALL))) == 2 * 2 * 3
    assert len(list(run_benchmark("degeneracy", SMALL))) == 1 * 2 * 2 * 2


def test_zero_noise_rows_are_exact():
    rows = list(run_benchmark("noise_sweep", SMALL))
    for r in rows:
        if r.sigma == 0:
            assert r.center_error < 1e-8 and r.radius_error < 1e-8


def test_full_precision_and_nan_runtime():
    rows = read_csv(rows_to_csv(run_benchmark("numerics", BenchConfig(trials=1))))
    assert all(r["runtime_us"] != r["runtime_us"] for r in rows)  # nan unless timing is on
    timed = read_csv(rows_to_csv(run_benchmark("numerics", BenchConfig(trials=1, timing=True))))
    assert all(r["runtime_us"] > 0 for r in timed)


def test_seed_changes_output():
    a = rows_to_csv(run_benchmark("noise_sweep", SMALL))
    b = rows_to_csv(run_benchmark("noise_sweep", BenchConfig(**{**SMALL.__dict__, "seed": 1})))
    assert a != b


def test_invalid():
    with pytest.raises(InvalidConfig):
        run_benchmark("table1", SMALL)
    with pytest.raises(InvalidConfig):
        BenchConfig(trials=0)
    with pytest.raises(InvalidConfig):
        BenchConfig(n_lines=(5,))


def test_write_csv_counts_rows():
    buf = io.StringIO()
    assert write_csv(run_benchmark("numerics", BenchConfig(trials=2)), buf) == 4
