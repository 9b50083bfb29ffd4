import math

import pytest

from clonedetect.metrics import (
    CSV_HEADER,
    CsvIOError,
    MetricsRow,
    ReportRow,
    SpecError,
    SweepSpec,
    detection_report,
    emit_csv,
    fit_complexity,
    lookup,
    ordering_check,
    parse_csv,
    reference_table,
    run_sweep,
)


def row(protocol="ppp", n=10, load=0.0, seed=0, messages=100, injected=0, detected=0, latency=-1.0):
    return MetricsRow(
        protocol=protocol, n=n, degree_D=4, diameter_s=3, load=load, seed=seed, ticks=20,
        messages_total=messages, bytes_total=messages * 32, station_peak_entries=n + 1,
        node_peak_memory_entries=5, clones_injected=injected, clones_detected=detected,
        false_positives=0, mean_detection_latency_ticks=latency,
    )


SMALL = SweepSpec(("ppp",), (20,), (0.0,), trials=1, overrides={"ticks": 20, "degree_D": 4})


def test_single_cell_sweep_gives_one_row():
    rows = run_sweep(SMALL)
    assert len(rows) == 1 and rows[0].protocol == "ppp" and rows[0].n == 20


def test_cell_count():
    spec = SweepSpec(("ppp", "broadcast", "rmulticast"), (50, 100, 200, 400), (0, 2, 4), trials=5)
    assert len(spec.cells()) == 3 * 4 * 3 * 5 == 180
    assert len({(c.protocol, c.n, c.load, c.seed) for c in spec.cells()}) == 180


def test_spec_parse_with_aliases_and_comments():
    spec = SweepSpec.parse(
        """
        # detection sweep
        protocols = ppp, broadcast
        n_values = 50,100
        load_values = 0, 2.5
        trials_per_cell = 3
        degree = 6   # target mean degree
        clones = 5
        clone_placement = far
        """
    )
    assert spec.protocols == ("ppp", "broadcast") and spec.trials == 3
    assert spec.load_values == (0.0, 2.5)
    assert spec.overrides == {"degree_D": 6, "clone_count": 5, "clone_placement": "far"}


@pytest.mark.parametrize(
    "text",
    [
        "n_values = 5\nload_values = 0",
        "protocols = gossip\nn_values = 5\nload_values = 0",
        "protocols = ppp\nn_values = five\nload_values = 0",
        "protocols = ppp\nn_values = 5\nload_values = 0\nwarp = 9",
        "protocols = ppp\nn_values = 5\nload_values = 0\nno equals sign",
        "protocols = ppp\nn_values = 5\nload_values = 0\ntrials = 0",
    ],
)
def test_spec_parse_errors(text):
    with pytest.raises(SpecError):
        SweepSpec.parse(text)


def test_csv_round_trip(tmp_path):
    rows = [row(seed=s, messages=10 + s, injected=2, detected=1, latency=3.25) for s in range(3)]
    path = emit_csv(rows, tmp_path / "out.csv")
    assert path.read_text().splitlines()[0] == CSV_HEADER
    assert parse_csv(path) == rows


def test_latency_formatting(tmp_path):
    path = emit_csv([row(latency=2.0), row(latency=-1.0)], tmp_path / "x.csv")
    lines = path.read_text().splitlines()
    assert lines[1].endswith(",2.000") and lines[2].endswith(",-1.000")
    assert path.read_text().endswith("\n")


def test_sweep_csv_byte_identical(tmp_path):
    a = emit_csv(run_sweep(SMALL), tmp_path / "a.csv").read_bytes()
    b = emit_csv(run_sweep(SMALL), tmp_path / "b.csv").read_bytes()
    assert a == b


def test_header_only_csv(tmp_path):
    path = emit_csv([], tmp_path / "empty.csv")
    assert path.read_text() == CSV_HEADER + "\n"
    assert parse_csv(path) == []


def test_unwritable_path(tmp_path):
    with pytest.raises(CsvIOError):
        emit_csv([row()], tmp_path / "missing" / "dir" / "x.csv")
    with pytest.raises(CsvIOError):
        parse_csv(tmp_path / "nope.csv")


def test_bad_header_rejected(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("a,b\n1,2\n")
    with pytest.raises(SpecError):
        parse_csv(p)


def test_row_invariant():
    with pytest.raises(ValueError):
        row(injected=1, detected=2)


def test_fit_linear():
    rows = [row(n=n, messages=7 * n) for n in (50, 100, 200, 400, 800)]
    fit = fit_complexity(rows, "ppp")
    assert fit.exponent == pytest.approx(1.0, abs=1e-6)
    assert fit.r_squared == pytest.approx(1.0)


def test_fit_quadratic_ignores_loaded_rows():
    rows = [row(protocol="rmulticast", n=n, messages=3 * n * n) for n in (50, 100, 200, 400)]
    rows += [row(protocol="rmulticast", n=n, load=4.0, messages=1) for n in (50, 100, 200, 400)]
    assert fit_complexity(rows, "rmulticast").exponent == pytest.approx(2.0, abs=1e-6)


def test_fit_needs_four_sizes():
    with pytest.raises(SpecError):
        fit_complexity([row(n=n) for n in (10, 20, 40)], "ppp")


def test_report_perfect_detection():
    rows = [row(seed=s, injected=5, detected=5, latency=1.0) for s in range(5)]
    (r,) = detection_report(rows)
    assert r.mean_rate == 1.0 and r.std_err == 0.0
    assert r.interval == (1.0, 1.0)


def test_report_requires_adversarial_rows():
    with pytest.raises(SpecError):
        detection_report([row()])


def test_ordering_verdicts():
    report = [
        ReportRow("rmulticast", 6.0, 30, 0.40, 0.03),
        ReportRow("ppp", 6.0, 30, 0.20, 0.03),
        ReportRow("broadcast", 6.0, 30, 0.19, 0.03),
        ReportRow("broadcast", 0.0, 30, 0.9, 0.03),
    ]
    first, second = ordering_check(report)
    assert first.confirmed and first.holds
    assert second.holds and not second.confirmed
    assert math.isclose(first.difference_low, 0.2 - 1.959963984540054 * math.hypot(0.03, 0.03))
    with pytest.raises(SpecError):
        ordering_check(report, load=0.0)


def test_reference_table():
    assert lookup("RED") == ("O(√n)", "O(D)")
    assert lookup("ppp") == ("O(n)", "O(s)")
    assert lookup("SDC")[1] == "NAP"
    assert lookup("rmulticast") == ("O(n²)", "O(n)")
    assert len(reference_table()) == 6
    with pytest.raises(KeyError):
        lookup("broadcast")
