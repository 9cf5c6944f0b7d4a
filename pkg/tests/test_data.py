import numpy as np
import pytest

from helpers import random_dataset
from riskratio import ObservationalDataset, ValidationError, load_csv, summarize, write_csv


def _write(tmp_path, text, name="data.csv"):
    path = tmp_path / name
    path.write_text(text, encoding="utf-8")
    return path


def test_load_csv_three_rows(tmp_path):
    path = _write(tmp_path, "y,t,x1\n2.0,1,0.3\n4.0,0,-1.5\n6.0,1,2.25\n")
    d = load_csv(path)
    assert d.n == 3 and d.p == 1
    assert np.array_equal(d.t, [1, 0, 1])
    assert np.array_equal(d.y, [2.0, 4.0, 6.0])


def test_load_csv_bad_treatment_names_row(tmp_path):
    rows = ["1.0,1,0.0"] * 4 + ["1.0,2,0.0", "1.0,0,0.0"]
    path = _write(tmp_path, "y,t,x1\n" + "\n".join(rows) + "\n")
    with pytest.raises(ValidationError, match="row 5"):
        load_csv(path)


def test_load_csv_nan_outcome_rejected(tmp_path):
    path = _write(tmp_path, "y,t,x1\n1.0,1,0.0\nNaN,0,1.0\n")
    with pytest.raises(ValidationError, match="row 2.*column y"):
        load_csv(path)


def test_load_csv_unparseable_cell_location(tmp_path):
    path = _write(tmp_path, "y,t,x1,x2\n1.0,1,0.0,2.0\n1.0,0,oops,2.0\n")
    with pytest.raises(ValidationError, match="row 2.*column x1"):
        load_csv(path)


def test_load_csv_header_errors(tmp_path):
    with pytest.raises(ValidationError, match="header"):
        load_csv(_write(tmp_path, "outcome,t,x1\n1.0,1,0.0\n"))
    with pytest.raises(ValidationError, match="x1..x2"):
        load_csv(_write(tmp_path, "y,t,x2,x1\n1.0,1,0.0,0.0\n"))


def test_load_csv_empty_file(tmp_path):
    with pytest.raises(ValidationError, match="empty"):
        load_csv(_write(tmp_path, ""))
    with pytest.raises(ValidationError, match="no data rows"):
        load_csv(_write(tmp_path, "y,t,x1\n"))


def test_round_trip_full_precision(tmp_path):
    d = random_dataset(0, n=37, p=3)
    path = tmp_path / "roundtrip.csv"
    write_csv(d, path)
    back = load_csv(path)
    assert np.array_equal(back.x, d.x)
    assert np.array_equal(back.t, d.t)
    assert np.array_equal(back.y, d.y)


def test_summarize_arm_means():
    d = ObservationalDataset(x=np.zeros((3, 1)), t=np.array([1, 0, 1]), y=np.array([2.0, 4.0, 6.0]))
    s = summarize(d)
    assert (s.n, s.n1, s.n0, s.p) == (3, 2, 1, 1)
    assert s.y_mean_treated == 4.0
    assert s.y_mean_control == 4.0


def test_summarize_empty_arm_reports_none():
    d = ObservationalDataset(x=np.zeros((2, 1)), t=np.array([1, 1]), y=np.array([1.0, 2.0]))
    s = summarize(d)
    assert s.y_mean_control is None and s.y_mean_treated == 1.5


def test_summarize_single_control_row():
    d = ObservationalDataset(x=np.zeros((1, 1)), t=np.array([0]), y=np.array([3.0]))
    s = summarize(d)
    assert (s.n, s.n1, s.n0) == (1, 0, 1)


def test_summarize_order_independent():
    d = random_dataset(1, n=50)
    perm = np.random.default_rng(2).permutation(50)
    shuffled = ObservationalDataset(x=d.x[perm], t=d.t[perm], y=d.y[perm])
    assert summarize(d) == summarize(shuffled)


def test_dataset_invariants():
    with pytest.raises(ValidationError):
        ObservationalDataset(x=np.zeros((2, 1)), t=np.array([1, 2]), y=np.ones(2))
    with pytest.raises(ValidationError):
        ObservationalDataset(x=np.array([[np.inf], [0.0]]), t=np.array([1, 0]), y=np.ones(2))
    with pytest.raises(ValidationError):
        ObservationalDataset(x=np.zeros((2, 1)), t=np.array([1, 0]), y=np.array([1.0, np.nan]))
    with pytest.raises(ValidationError):
        ObservationalDataset(x=np.zeros((0, 1)), t=np.array([]), y=np.array([]))
    with pytest.raises(ValidationError):
        ObservationalDataset(x=np.zeros((2, 1)), t=np.array([1, 0, 1]), y=np.ones(2))


def test_dataset_is_immutable():
    d = random_dataset(3)
    with pytest.raises(ValueError):
        d.y[0] = 99.0
    with pytest.raises(ValueError):
        d.x[0, 0] = 99.0


def test_binary_outcome_flag():
    assert random_dataset(4, binary=True).binary_outcome
    assert not random_dataset(4).binary_outcome


def test_custom_schema_round_trip(tmp_path):
    from riskratio import CsvSchema

    schema = CsvSchema(y="outcome", t="treated", x_prefix="cov")
    d = random_dataset(5, n=12, p=2)
    path = tmp_path / "custom.csv"
    write_csv(d, path, schema=schema)
    assert path.read_text(encoding="utf-8").startswith("outcome,treated,cov1,cov2")
    back = load_csv(path, schema=schema)
    assert np.array_equal(back.y, d.y)
    with pytest.raises(ValidationError):
        load_csv(path)  # default schema does not match
