import numpy as np
import pytest

from flowlab.geometry import (DiagonalMetric, Geometry, SIGNATURES, StructureTriple,
                              structure_constants)


def test_signature_bijection():
    seen = set()
    for geometry, sig in SIGNATURES.items():
        triple = StructureTriple.from_signature(*sig)
        assert triple.geometry is geometry
        seen.add(sig)
    assert len(seen) == 6


@pytest.mark.parametrize("sig,geometry", [
    ((-1, -1, -1), Geometry.SU2),
    ((-1, -1, 0), Geometry.ISOM_R2),
    ((-1, 1, 1), Geometry.SL2R),
    ((-1, 0, 0), Geometry.HEISENBERG),
    ((-1, 0, 1), Geometry.ISOM_R11),
    ((0, 0, 0), Geometry.R3),
])
def test_admitted_triples(sig, geometry):
    assert StructureTriple.for_geometry(geometry).signature() == sig


def test_ordering_violation_rejected():
    with pytest.raises(ValueError, match="sorted"):
        StructureTriple.from_signature(1, 0, -1)


def test_out_of_range_component_named():
    with pytest.raises(ValueError, match="mu=2"):
        StructureTriple.from_signature(-1, 2, 1)


def test_unlisted_triple_rejected():
    with pytest.raises(ValueError, match="admitted"):
        StructureTriple.from_signature(-1, -1, 1)


def test_mismatched_tag_rejected():
    with pytest.raises(ValueError, match="does not match"):
        StructureTriple(-1, -1, -1, Geometry.R3)


def test_su2_bracket_table():
    c = structure_constants(StructureTriple.for_geometry(Geometry.SU2))
    # [F2,F3] = -2 F1, [F3,F1] = -2 F2, [F1,F2] = -2 F3
    assert c[1, 2, 0] == -2.0 and c[2, 0, 1] == -2.0 and c[0, 1, 2] == -2.0
    assert np.all(c == -np.transpose(c, (1, 0, 2)))
    assert np.count_nonzero(c) == 6


def test_r3_brackets_vanish():
    c = structure_constants(StructureTriple.for_geometry(Geometry.R3))
    assert np.all(c == 0.0)


def test_heisenberg_bracket_table():
    c = structure_constants(StructureTriple.for_geometry(Geometry.HEISENBERG))
    assert c[1, 2, 0] == -2.0
    assert np.count_nonzero(c) == 2


def test_metric_validation():
    with pytest.raises(ValueError, match="b=-1.0"):
        DiagonalMetric(1.0, -1.0, 2.0)
    with pytest.raises(ValueError, match="positive"):
        DiagonalMetric(1.0, 0.0, 2.0)
    with pytest.raises(ValueError, match="not finite"):
        DiagonalMetric(1.0, float("nan"), 2.0)


def test_metric_accessors():
    m = DiagonalMetric(1.0, 2.0, 3.0)
    assert m.det == 6.0
    assert np.allclose(m.matrix @ m.inverse, np.eye(3))
    assert m.scaled(2.0).as_tuple() == (2.0, 4.0, 6.0)
    assert DiagonalMetric.from_array(np.array([1.0, 2.0, 3.0])) == m
