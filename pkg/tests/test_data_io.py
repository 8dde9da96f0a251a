import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from onesided.data_io import (
    RESULT_HEADER,
    DatasetSchema,
    ResultRow,
    ingest_csv,
    load_schema,
    make_run_id,
    parse_run_id,
    read_results,
    summarize,
    write_results,
    write_summary,
)
from onesided.exceptions import ParseError, SchemaMismatch


def write(tmp_path, text, name="d.csv"):
    p = tmp_path / name
    p.write_text(text)
    return p


def test_two_point_standardization(tmp_path):
    p = write(tmp_path, "a,b,y\n0,0,1\n2,2,0\n")
    X, y, rep = ingest_csv(p, DatasetSchema(label="y", numeric=["a", "b"], intercept=False, row_norm=np.sqrt(2)))
    np.testing.assert_allclose(X, [[-1, -1], [1, 1]])
    np.testing.assert_array_equal(y, [1, 0])
    assert rep.means == {"a": 1.0, "b": 1.0}


def test_one_hot(tmp_path):
    p = write(tmp_path, "c,y\na,1\nb,2\na,3\n")
    X, _, rep = ingest_csv(p, DatasetSchema(label="y", categorical=["c"], intercept=False))
    np.testing.assert_array_equal(X, [[1, 0], [0, 1], [1, 0]])
    assert rep.columns == ["c=a", "c=b"]
    X, _, _ = ingest_csv(p, DatasetSchema(label="y", categorical=["c"], drop_first=True))
    assert X.shape == (3, 2)  # c=b plus intercept


def test_missing_label_column(tmp_path):
    p = write(tmp_path, "a,b\n1,2\n")
    with pytest.raises(SchemaMismatch, match="'y'"):
        ingest_csv(p, DatasetSchema(label="y"))


def test_parse_error_names_row_and_column(tmp_path):
    p = write(tmp_path, "a,y\n1,0\n2,0\nthree,1\n")
    with pytest.raises(ParseError, match=r"row 4, column 'a'"):
        ingest_csv(p, DatasetSchema(label="y", numeric=["a"]))


def test_missing_rows_dropped_and_types_inferred(tmp_path):
    p = write(tmp_path, "a,c,y\n1,u,yes\n?,v,no\n3,,yes\n5,v,no\n7,u,yes\n")
    X, y, rep = ingest_csv(p, DatasetSchema(label="y", positive="yes"))
    assert rep.rows_read == 5 and rep.rows_dropped == 2
    assert rep.columns == ["a", "c=u", "c=v", "intercept"]
    np.testing.assert_array_equal(y, [1, 0, 1])


def test_constant_columns_dropped(tmp_path):
    p = write(tmp_path, "a,k,y\n1,4,0\n2,4,1\n3,4,0\n")
    with pytest.warns(UserWarning, match="constant"):
        X, _, rep = ingest_csv(p, DatasetSchema(label="y", numeric=["a", "k"]))
    assert rep.dropped_constant == ["k"] and X.shape == (3, 2)


def random_csv(tmp_path, seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 40))
    lines = ["x1,x2,cat,y"]
    for _ in range(n):
        lines.append(f"{rng.normal() * 10:.4f},{rng.exponential():.4f},{rng.choice(['p', 'q', 'r'])},{rng.normal():.3f}")
    return write(tmp_path, "\n".join(lines) + "\n", f"r{seed}.csv")


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.5, 5))
def test_ingest_invariants(tmp_path_factory, seed, B):
    p = random_csv(tmp_path_factory.mktemp("csv"), seed)
    schema = DatasetSchema(label="y", numeric=["x1", "x2"], categorical=["cat"], row_norm=B, intercept=False)
    X, y, rep = ingest_csv(p, schema)
    X2, y2, _ = ingest_csv(p, schema)
    np.testing.assert_array_equal(X, X2)
    assert np.linalg.norm(X, axis=1).max() <= B + 1e-9
    assert np.all(np.isfinite(X))
    # undo the global rescale to check standardization of numeric columns
    for j in range(2):
        col = X[:, j] / rep.scale
        assert abs(col.mean()) <= 1e-9 and abs(col.std() - 1) <= 1e-9


def test_load_schema(tmp_path):
    p = write(tmp_path, "label: income\npositive: '>50K'\ncategorical: [work]\n", "s.yaml")
    s = load_schema(p)
    assert s.label == "income" and s.positive == ">50K" and s.categorical == ["work"]
    with pytest.raises(ValueError):
        load_schema({"label": "y", "colour": 1})
    with pytest.raises(ValueError):
        load_schema({"numeric": ["a"]})


def test_bundled_dataset_loads():
    from importlib import resources

    data = resources.files("onesided") / "data"
    X, y, rep = ingest_csv(data / "diabetes.csv", load_schema(data / "diabetes.yaml"))
    assert X.shape == (442, 11) and rep.rows_dropped == 0
    assert np.linalg.matrix_rank(X) == 11


# ---------------------------------------------------------------- results


def row(run_id="greedy|alpha=|cut=0.5|seed=0", t=1, r=0.5, R=0.5):
    return ResultRow(run_id, parse_run_id(run_id)["method"], parse_run_id(run_id)["seed"], t, r, R, 1, 1)


def test_run_id_round_trip():
    rid = make_run_id("margin", 0.125, 0.7, 3)
    assert rid == "margin|alpha=0.125|cut=0.7|seed=3"
    assert parse_run_id(rid) == {"method": "margin", "alpha": 0.125, "cutoff": 0.7, "seed": 3}
    assert parse_run_id(make_run_id("greedy", None, None, 0))["alpha"] is None


def test_write_results_shapes(tmp_path):
    p = tmp_path / "r.csv"
    write_results([], p)
    assert p.read_text() == ",".join(RESULT_HEADER) + "\n"
    write_results([row(r=1 / 3, R=1 / 3)], p)
    lines = p.read_text().splitlines()
    assert len(lines) == 2 and lines[1].endswith(",0.333333,0.333333,1,1")


def test_results_round_trip_byte_identical(tmp_path):
    rows = [row(t=2, r=0.1, R=0.6), row(t=1), row("adaptive|alpha=1|cut=0.5|seed=1", 1, 1e-7, 1e-7)]
    a, b = tmp_path / "a.csv", tmp_path / "b.csv"
    write_results(rows, a)
    write_results(read_results(a), b)
    assert a.read_bytes() == b.read_bytes()
    assert [r.run_id for r in read_results(a)][0].startswith("adaptive")


def test_read_results_rejects_bad_files(tmp_path):
    p = write(tmp_path, "run_id,method\nx,y\n")
    with pytest.raises(ParseError, match="header"):
        read_results(p)
    p = write(tmp_path, ",".join(RESULT_HEADER) + "\nid,m,0,one,0,0,0,1\n")
    with pytest.raises(ParseError, match="line 2"):
        read_results(p)


def test_summary_examples(tmp_path):
    rows = [row("greedy|alpha=|cut=0.5|seed=0", R=10), row("greedy|alpha=|cut=0.5|seed=1", R=12)]
    (s,) = summarize(rows)
    assert (s.mean_RT, s.stderr, s.n_seeds) == (11, 1, 2)
    (s,) = summarize(rows[:1])
    assert s.stderr == 0 and s.n_seeds == 1
    rows = [row("margin|alpha=0.5|cut=0.5|seed=0", R=5), row("margin|alpha=1|cut=0.5|seed=0", R=7)]
    (s,) = summarize(rows)
    assert s.alpha == 0.5 and s.mean_RT == 5
    rows = [row("margin|alpha=2|cut=0.5|seed=0", R=5), row("margin|alpha=1|cut=0.5|seed=0", R=5)]
    assert summarize(rows)[0].alpha == 1  # ties go to the smaller alpha
    p = tmp_path / "s.csv"
    write_summary(summarize(rows), p)
    assert p.read_text() == "method,cutoff,alpha,mean_RT,stderr,n_seeds\nmargin,0.5,1,5,0,1\n"


def test_summary_uses_last_round_only():
    rows = [row(t=1, R=1.0), row(t=2, R=3.0)]
    assert summarize(rows)[0].mean_RT == 3.0
