import json

import numpy as np
import pytest

from sublevel.dataio import (
    SCHEMA,
    Dataset,
    RunArtifact,
    emit_convergence_svg,
    load_libsvm,
    read_artifact_json,
    standardize,
    write_libsvm,
    write_summary_json,
    write_trace_csv,
)
from sublevel.errors import DimensionError, EmptyDataset, ParseError
from sublevel.optimizers import MethodConfig, run
from sublevel.trace import IterationRecord, IterationTrace

HEADER = "k,f,grad_norm,decrement,step,sigma_floor,elapsed_s\n"


def _write(tmp_path, text, name="data.svm"):
    path = tmp_path / name
    path.write_text(text)
    return path


def test_parse_sparse_rows(tmp_path):
    ds = load_libsvm(_write(tmp_path, "1 1:0.5 3:2.0\n-1 2:1e-3\n"))
    np.testing.assert_array_equal(ds.features, [[0.5, 0.0, 2.0], [0.0, 1e-3, 0.0]])
    np.testing.assert_array_equal(ds.labels, [1.0, -1.0])
    assert ds.name == "data" and ds.source.startswith("file:")


def test_blank_lines_and_empty_rows(tmp_path):
    ds = load_libsvm(_write(tmp_path, "\n0\n\n1 2:4\n"))
    assert ds.shape == (2, 2)
    np.testing.assert_array_equal(ds.features[0], [0.0, 0.0])


def test_label_conventions(tmp_path):
    path = _write(tmp_path, "0 1:1\n1 1:2\n2 1:3\n")
    np.testing.assert_array_equal(load_libsvm(path, label_convention="binary").labels, [-1, 1, 1])
    np.testing.assert_array_equal(load_libsvm(path, label_convention="unit").labels, [0, 1, 1])
    np.testing.assert_array_equal(load_libsvm(path).labels, [0, 1, 2])


def test_n_override(tmp_path):
    path = _write(tmp_path, "1 2:1\n")
    assert load_libsvm(path, n_override=5).shape == (1, 5)
    with pytest.raises(DimensionError):
        load_libsvm(path, n_override=1)


@pytest.mark.parametrize(
    "text, line, column",
    [
        ("1 3:1 2:1\n", 1, 7),
        ("1 1:1\n1 1:1 1:2\n", 2, 7),
        ("1 1:abc\n", 1, 5),
        ("1 0:1\n", 1, 3),
        ("1 -1:2\n", 1, 3),
        ("x 1:1\n", 1, 1),
        ("1 1:1 7\n", 1, 7),
        ("1 1:nan\n", 1, 5),
    ],
)
def test_parse_errors_locate_the_token(tmp_path, text, line, column):
    with pytest.raises(ParseError) as info:
        load_libsvm(_write(tmp_path, text))
    assert (info.value.line, info.value.column) == (line, column)
    assert str(info.value).startswith(f"line {line}, column {column}:")


@pytest.mark.parametrize("text", ["", "\n\n  \n"])
def test_empty_file(tmp_path, text):
    with pytest.raises(EmptyDataset):
        load_libsvm(_write(tmp_path, text))


def test_libsvm_round_trip(tmp_path, rng):
    features = rng.standard_normal((6, 4))
    features[features < 0] = 0.0
    ds = Dataset(features, rng.choice([-1.0, 1.0], 6), name="rt")
    path = tmp_path / "rt.svm"
    write_libsvm(ds, path)
    back = load_libsvm(path, n_override=4)
    np.testing.assert_array_equal(back.features, ds.features)
    np.testing.assert_array_equal(back.labels, ds.labels)


CORRUPTIONS = ("value", "index", "colon", "order", "label", "infinite")


def _random_rows(rng, m, n):
    rows = []
    for _ in range(m):
        indices = np.sort(rng.choice(np.arange(1, n + 1), size=int(rng.integers(0, n + 1)), replace=False))
        rows.append((float(rng.choice([-1.0, 0.0, 1.0, 2.5])),
                     [(int(j), float(v)) for j, v in zip(indices, rng.standard_normal(indices.size))]))
    return rows


def _render(label, entries):
    return " ".join([repr(label)] + [f"{j}:{v!r}" for j, v in entries])


@pytest.mark.parametrize("seed", range(20))
def test_parser_fuzz(tmp_path, seed):
    """Random well-formed files parse exactly; one corrupted token is reported on its line."""
    rng = np.random.default_rng(seed)
    n = 12
    rows = _random_rows(rng, int(rng.integers(1, 15)), n)
    lines = [_render(label, entries) for label, entries in rows]
    ds = load_libsvm(_write(tmp_path, "\n".join(lines) + "\n"), n_override=n)
    expected = np.zeros((len(rows), n))
    for i, (_, entries) in enumerate(rows):
        for j, v in entries:
            expected[i, j - 1] = v
    np.testing.assert_array_equal(ds.features, expected)
    np.testing.assert_array_equal(ds.labels, [label for label, _ in rows])

    target = int(rng.integers(len(rows)))
    label, entries = rows[target]
    kind = CORRUPTIONS[int(rng.integers(len(CORRUPTIONS)))]
    if not entries and kind != "label":
        entries = [(1, 1.0)]
    if kind == "order" and len(entries) < 2:
        entries = [(2, 1.0), (3, 1.0)]
    tokens = _render(label, entries).split(" ")
    match kind:
        case "value":
            tokens[1] = tokens[1].split(":")[0] + ":1.2.3"
        case "index":
            tokens[1] = "0:" + tokens[1].split(":")[1]
        case "colon":
            tokens[1] = tokens[1].replace(":", "")
        case "order":
            tokens[1], tokens[2] = tokens[2], tokens[1]
        case "label":
            tokens[0] = "--" + tokens[0]
        case "infinite":
            tokens[1] = tokens[1].split(":")[0] + ":inf"
    lines[target] = " ".join(tokens)
    with pytest.raises(ParseError) as info:
        load_libsvm(_write(tmp_path, "\n".join(lines) + "\n", name="broken.svm"), n_override=n)
    assert info.value.line == target + 1


def test_dataset_validation():
    with pytest.raises(ValueError):
        Dataset(np.array([[np.inf]]), np.array([1.0]))
    with pytest.raises(DimensionError):
        Dataset(np.ones((2, 2)), np.ones(3))
    with pytest.raises(EmptyDataset):
        Dataset(np.ones((0, 2)), np.ones(0))


def test_standardize(rng):
    features = np.column_stack([rng.normal(3.0, 2.0, 50), np.ones(50), rng.normal(size=50)])
    ds = standardize(Dataset(features, np.ones(50)))
    assert ds.standardized
    np.testing.assert_allclose(ds.features.mean(axis=0), 0.0, atol=1e-12)
    np.testing.assert_allclose(ds.features.std(axis=0), [1.0, 0.0, 1.0], atol=1e-12)
    np.testing.assert_allclose(standardize(ds).features, ds.features, atol=1e-12)


def _artifact(logistic, **metadata):
    trace = run(logistic, np.zeros(logistic.dim), MethodConfig("newton", max_iters=4))
    return RunArtifact({"method": "newton"}, trace, dict(metadata))


def test_header_only_csv(tmp_path):
    path = tmp_path / "empty.csv"
    write_trace_csv(RunArtifact({}, IterationTrace(method="gd")), path)
    assert path.read_text() == HEADER


def test_csv_rows(tmp_path):
    trace = IterationTrace(method="gd", records=[IterationRecord(k=0, f=1.5, grad_norm=0.25)])
    path = tmp_path / "gd.csv"
    write_trace_csv(RunArtifact({}, trace), path)
    assert path.read_text() == HEADER + "0,1.5,0.25,,,,0\n"


def test_csv_reports_path(tmp_path):
    with pytest.raises(OSError, match="cannot write trace"):
        write_trace_csv(RunArtifact({}, IterationTrace(method="gd")), tmp_path / "no" / "x.csv")


def test_json_round_trip(tmp_path, logistic):
    artifact = _artifact(logistic, f_star=0.5)
    path = tmp_path / "newton.json"
    write_summary_json(artifact, path)
    payload = json.loads(path.read_text())
    assert payload["schema"] == SCHEMA
    assert payload["records"][-1][3] is None

    back = read_artifact_json(path)
    assert back.method == "newton" and back.trace.status == artifact.trace.status
    assert back.config == artifact.config and back.metadata == {"f_star": 0.5}
    for mine, theirs in zip(artifact.trace.records, back.trace.records):
        np.testing.assert_array_equal(np.array(mine.as_row(), dtype=float),
                                      np.array(theirs.as_row(), dtype=float))


def test_json_rejects_other_schema(tmp_path):
    path = tmp_path / "other.json"
    path.write_text(json.dumps({"schema": "other/2"}))
    with pytest.raises(ValueError):
        read_artifact_json(path)


def test_svg(tmp_path, logistic):
    artifact = _artifact(logistic, f_star=0.0)
    path = tmp_path / "conv.svg"
    assert emit_convergence_svg([artifact], path) is False
    text = path.read_text()
    assert "<svg" in text and "newton" in text


def test_svg_clamps_zero_gap(tmp_path, logistic):
    artifact = _artifact(logistic)
    artifact.metadata["f_star"] = float(artifact.trace.final.f)
    assert emit_convergence_svg([artifact], tmp_path / "gap.svg") is True


def test_svg_is_reproducible(tmp_path, logistic):
    artifact = _artifact(logistic, f_star=0.0)
    emit_convergence_svg([artifact], tmp_path / "a.svg", y="grad_norm")
    emit_convergence_svg([artifact], tmp_path / "b.svg", y="grad_norm")
    assert (tmp_path / "a.svg").read_bytes() == (tmp_path / "b.svg").read_bytes()


def test_svg_argument_checks(tmp_path, logistic):
    with pytest.raises(ValueError):
        emit_convergence_svg([], tmp_path / "none.svg")
    with pytest.raises(ValueError):
        emit_convergence_svg([_artifact(logistic)], tmp_path / "gap.svg", y="f_gap")
