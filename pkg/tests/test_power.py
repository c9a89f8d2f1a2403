import math

import pytest

from frechetcc.errors import InvalidInputError
from frechetcc.power import (
    CSV_HEADER,
    PowerOptions,
    PowerRow,
    power_study,
    replicate_seed,
    run_replicate,
)


def test_row_rate_and_se():
    row = PowerRow("fcc", 50, 0.5, 30, 100)
    assert row.rate == 0.3
    assert row.se == pytest.approx(math.sqrt(0.3 * 0.7 / 100))
    assert math.isnan(PowerRow("fcc", 50, 0.5, 0, 0, 3).rate)


def test_zero_reps_header_only():
    curve = power_study(PowerOptions("s1"), [50], [0.5], 0)
    assert curve.to_csv() == CSV_HEADER + "\n"


def test_csv_schema_and_thread_independence():
    opts = PowerOptions("s1", boot=50, methods=("fcc", "pearson", "chatterjee", "energy"))
    a = power_study(opts, [30, 40], [0.0, 0.5], 6, threads=1)
    b = power_study(opts, [30, 40], [0.0, 0.5], 6, threads=3)
    assert a.to_csv() == b.to_csv()
    lines = a.to_csv().splitlines()
    assert lines[0] == "method,n,delta,rejections,replications,rate,se,errors"
    assert len(lines) == 1 + 2 * 2 * 4
    for line in lines[1:]:
        f = line.split(",")
        assert len(f) == 8
        assert float(f[5]) == int(f[3]) / int(f[4])
        assert int(f[4]) + int(f[7]) == 6


def test_replicate_seeds_distinct():
    seeds = {replicate_seed(0, n, d, r) for n in (50, 80) for d in (0.0, 0.5) for r in range(50)}
    assert len(seeds) == 200


def test_options_validation():
    with pytest.raises(InvalidInputError):
        PowerOptions("s9")
    with pytest.raises(InvalidInputError):
        PowerOptions("s2", methods=("pearson",))
    with pytest.raises(InvalidInputError):
        PowerOptions("s1", methods=("gmc",))
    with pytest.raises(InvalidInputError):
        PowerOptions("s1", alpha=1.5)
    with pytest.raises(InvalidInputError):
        PowerOptions("s3", scalar_slice=True)
    assert PowerOptions("s1").partition_params() == (30, 4)
    assert PowerOptions("s2", H=7).partition_params() == (7, 5)


def test_failures_are_recorded_not_raised():
    # n = 2 is too small for the energy statistic; the sweep still finishes
    opts = PowerOptions("s2", boot=10, methods=("fcc", "energy"))
    out = run_replicate(opts, 3, 0.5, 0)
    assert isinstance(out["energy"], str)
    curve = power_study(opts, [3], [0.5], 2)
    energy = [r for r in curve.rows if r.method == "energy"][0]
    assert energy.errors == 2 and energy.replications == 0
