import io
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from pfkernel.diagram import (DiagramFormatError, EssentialPolicy, PersistenceDiagram, diagonal_mirror,
                              dump_diagram, load_diagram, project_to_diagonal, read_diagram, write_diagram)

from conftest import coord, diagrams


@pytest.mark.parametrize("u, expected", [((1, 3), (2, 2)), ((0.7, 0.7), (0.7, 0.7)), ((0, 5), (2.5, 2.5))])
def test_project_examples(u, expected):
    assert project_to_diagonal(u) == expected


def test_project_rejects_infinite_death():
    with pytest.raises(ValueError):
        project_to_diagonal((0.0, math.inf))


@given(coord, coord)
def test_project_idempotent(b, d):
    once = project_to_diagonal((b, d))
    assert project_to_diagonal(once) == once


@given(coord, coord, coord)
def test_project_is_closest_diagonal_point(b, d, a):
    p = project_to_diagonal((b, d))
    assert math.hypot(b - p[0], d - p[1]) <= math.hypot(b - a, d - a) + 1e-12


def test_mirror_examples():
    m = diagonal_mirror(PersistenceDiagram([(1, 3), (0, 2)]))
    assert m.points.tolist() == [[2, 2], [1, 1]]
    assert len(diagonal_mirror(PersistenceDiagram([]))) == 0
    assert diagonal_mirror(PersistenceDiagram([(1, 3), (1, 3)])).points.tolist() == [[2, 2], [2, 2]]


def test_points_read_only_and_multiplicity_kept():
    dg = PersistenceDiagram([(0, 1), (0, 1)])
    assert len(dg) == 2
    with pytest.raises(ValueError):
        dg.points[0, 0] = 5.0


def test_constructor_validation():
    with pytest.raises(ValueError):
        PersistenceDiagram([(1.0, 0.5)])
    with pytest.raises(ValueError):
        PersistenceDiagram([(math.nan, 1.0)])
    with pytest.raises(ValueError):
        PersistenceDiagram([(math.inf, math.inf)])


def test_load_examples():
    assert len(load_diagram("0.0 1.5\n0.2 0.9\n")) == 2
    assert len(load_diagram("0.0 inf\n", EssentialPolicy.drop())) == 0
    with pytest.raises(DiagramFormatError):
        load_diagram("1.0 0.5\n")


def test_load_reports_line_number():
    with pytest.raises(DiagramFormatError) as info:
        load_diagram("# c\n0 1\n0 x\n")
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_load_header_comments_and_inf_spellings():
    dg = load_diagram(b"dim 1\n# comment\n0 Inf\n0.5 INFINITY\n0 1\n", EssentialPolicy.keep())
    assert dg.dim == 1
    assert np.isinf(dg.deaths).sum() == 2
    capped = load_diagram(io.StringIO("0 inf\n"), EssentialPolicy.cap(2.0))
    assert capped.points.tolist() == [[0.0, 2.0]]


@pytest.mark.parametrize("text", ["dim\n", "0 1\ndim 1\n", "0 1 2\n", "0 nan\n", "inf 1\n"])
def test_load_malformed(text):
    with pytest.raises(DiagramFormatError):
        load_diagram(text, EssentialPolicy.keep())


def test_cap_rejects_late_birth():
    with pytest.raises(ValueError):
        load_diagram("3 inf\n", EssentialPolicy.cap(1.0))


@pytest.mark.parametrize("text, mode", [("drop", "drop"), ("keep", "keep"), ("cap:0.5", "cap")])
def test_policy_parse(text, mode):
    assert EssentialPolicy.parse(text).mode == mode
    assert str(EssentialPolicy.parse(text)) == text


@given(diagrams(), st.integers(0, 3))
def test_round_trip(dg, dim):
    dg = PersistenceDiagram(dg.points, dim)
    assert load_diagram(dump_diagram(dg), EssentialPolicy.keep()) == dg


def test_round_trip_with_infinity(tmp_path):
    dg = PersistenceDiagram([(0.1, math.inf), (1 / 3, 2 / 3)], 1)
    write_diagram(tmp_path / "a.dgm", dg)
    assert read_diagram(tmp_path / "a.dgm", EssentialPolicy.keep()) == dg
