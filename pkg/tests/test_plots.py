import xml.etree.ElementTree as ET

import numpy as np
import pytest

from vrsaccade.errors import ShapeMismatch
from vrsaccade.model_select import decision_grid
from vrsaccade.plots import emit_plot, emit_table, format_table, render_plot
from vrsaccade.svm import SvmParams, predict_many, svm_train

NS = "{http://www.w3.org/2000/svg}"


def parse(text):
    return ET.fromstring(text.encode())


def by_class(root, tag, cls):
    return [e for e in root.iter(NS + tag) if e.get("class") == cls]


def test_table_format(tmp_path):
    rows = [(1, 0.123456789012, True), (2, 1e-20, False)]
    emit_table(rows, tmp_path / "a.csv", ["i", "x", "flag"])
    assert (tmp_path / "a.csv").read_text() == "i,x,flag\n1,0.123456789,1\n2,1e-20,0\n"
    emit_table(rows, tmp_path / "b.csv", ["i", "x", "flag"])
    assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()


def test_header_only(tmp_path):
    emit_table([], tmp_path / "e.csv", ["a", "b"])
    assert (tmp_path / "e.csv").read_text() == "a,b\n"


def test_row_arity_checked():
    with pytest.raises(ShapeMismatch):
        format_table(["a", "b"], [(1,)])


def test_line_one_polyline_per_series():
    svg = parse(render_plot("line", {"series": [("a", [0, 1, 2], [1, 2, 1]),
                                                ("b", [0, 1, 2], [0, 0, 3])],
                                     "title": "T", "xlabel": "x", "ylabel": "y"}))
    assert len(by_class(svg, "polyline", "series")) == 2
    texts = [t.text for t in svg.iter(NS + "text")]
    assert "T" in texts and "a" in texts and "b" in texts


def test_scatter_points():
    svg = parse(render_plot("scatter", {"groups": [("g", [0, 1, 2], [2, 1, 0])]}))
    assert len(list(svg.iter(NS + "circle"))) >= 3


def test_matrix_cells():
    svg = parse(render_plot("matrix", {"matrix": [[50, 10], [5, 35]]}))
    assert len(by_class(svg, "rect", "cell")) == 4
    assert sorted(t.text for t in by_class(svg, "text", "count")) == ["10", "35", "5", "50"]


def test_matrix_shape():
    with pytest.raises(ShapeMismatch):
        render_plot("matrix", {"matrix": [[1, 2, 3]]})


def test_contour_consistent_with_predict(tmp_path):
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 2))
    y = X[:, 0] * X[:, 1] > 0
    m = svm_train(X, y, SvmParams(C=10.0, gamma=1.0))
    xs, ys, values = decision_grid(m, (-2, 2, -2, 2), 50)
    emit_plot("contour", {"xs": xs, "ys": ys, "values": values,
                          "support_vectors": m.support_vectors}, tmp_path / "c.svg")
    svg = parse((tmp_path / "c.svg").read_text())
    cells = by_class(svg, "rect", "cell")
    assert len(cells) == 2500
    pts = np.array([(x, yv) for yv in ys for x in xs])
    signs = [c.get("data-sign") == "+" for c in cells]
    assert signs == predict_many(m, pts).tolist()
    inside = ((np.abs(m.support_vectors) <= 2).all(axis=1)).sum()
    assert len(by_class(svg, "circle", "sv")) == inside


def test_contour_shape_checked():
    with pytest.raises(ShapeMismatch):
        render_plot("contour", {"xs": [0, 1], "ys": [0, 1], "values": [1, 2, 3]})


def test_unknown_kind():
    with pytest.raises(ValueError):
        render_plot("pie", {})


def test_escaping():
    svg = parse(render_plot("line", {"series": [('a "q" <b>', [0, 1], [0, 1])], "title": "x&y"}))
    assert svg is not None
