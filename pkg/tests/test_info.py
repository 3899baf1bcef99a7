import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from interpriv.dist import BINARY, Alphabet, JointPmf, PmfError, make_dsbs
from interpriv.info import (binary_entropy, conditional_entropy, entropy, entropy_array,
                            mutual_information)


def test_known_values():
    assert binary_entropy(0.5) == 1.0
    assert binary_entropy(0.0) == 0.0 and binary_entropy(1.0) == 0.0
    assert binary_entropy(0.11) == pytest.approx(0.4999, abs=1e-4)
    p = make_dsbs(0.03)
    assert mutual_information(p, "X1", "X2") == pytest.approx(1 - binary_entropy(0.03), abs=1e-14)
    assert conditional_entropy(p, "X1", "X2") == pytest.approx(binary_entropy(0.03), abs=1e-14)


def test_zero_cells_and_clamp():
    p = JointPmf((("A", BINARY), ("B", BINARY)), [[0.5, 0.0], [0.0, 0.5]])
    assert entropy(p, ("A", "B")) == 1.0
    q = JointPmf((("A", BINARY), ("B", BINARY)), np.full((2, 2), 0.25))
    assert mutual_information(q, "A", "B") == 0.0


def test_errors():
    p = make_dsbs(0.2)
    with pytest.raises(PmfError):
        mutual_information(p, "X1", "X1")
    with pytest.raises(PmfError):
        entropy(p, "Z")


def _random_joint(w):
    t = np.array(w).reshape(2, 3, 2)
    t /= t.sum()
    return JointPmf((("A", BINARY), ("B", Alphabet.range(3)), ("C", BINARY)), t)


weights = st.lists(st.floats(0.0, 1.0), min_size=12, max_size=12).filter(lambda w: sum(w) > 0.1)


@settings(max_examples=60, deadline=None)
@given(weights)
def test_identities(w):
    p = _random_joint(w)
    i_ab = mutual_information(p, "A", "B")
    assert i_ab >= 0
    assert i_ab == pytest.approx(mutual_information(p, "B", "A"), abs=1e-12)
    # chain rule
    lhs = mutual_information(p, "A", ("B", "C"))
    rhs = mutual_information(p, "A", "C") + mutual_information(p, "A", "B", given="C")
    assert lhs == pytest.approx(rhs, abs=1e-10)
    assert conditional_entropy(p, "A", ("B", "C")) <= entropy(p, "A") + 1e-12
    assert entropy(p, "B") <= np.log2(3) + 1e-12


def test_entropy_array_axis():
    m = np.array([[0.25, 0.25], [0.5, 0.0]])
    np.testing.assert_allclose(entropy_array(m, axis=1), [1.0, 0.5])
