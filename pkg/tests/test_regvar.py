import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from branchimm.regvar import Asym, RegVarSeq, Term, compare, diverges, n_term, ratio_limit, summed

exps = st.floats(0.0, 3.0, allow_nan=False)
scales = st.floats(0.1, 10.0, allow_nan=False)


def test_term_algebra():
    a = Term(2.0, 1.5, 1.0)
    b = Term(4.0, 0.5, 0.0)
    assert a * b == Term(8.0, 2.0, 1.0)
    assert a**2 == Term(4.0, 3.0, 2.0)
    assert a / b == Term(0.5, 1.0, 1.0)
    assert 3 * a == Term(6.0, 1.5, 1.0)


def test_compare_breaks_exponent_ties_by_log_power():
    assert compare(Term(1, 2, 0), Term(5, 1, 3)) == 1
    assert compare(Term(1, 1, 1), Term(5, 1, 0)) == 1
    assert compare(Term(1, 1, 0), Term(5, 1, 0)) == 0
    assert compare(Term(1, 1, 0), Term(5, 1 + 1e-14, 0)) == 0
    assert ratio_limit(Term(1, 1, 0), Term(4, 1, 0)) == 0.25
    assert ratio_limit(Term(1, 0, 0), Term(4, 1, 0)) == 0.0
    assert ratio_limit(Term(1, 2, 0), Term(4, 1, 0)) == math.inf


def test_diverges():
    assert diverges(n_term(0.1))
    assert diverges(Term(1, 0, 1))
    assert not diverges(Term(7, 0, 0))


def test_asym_merges_and_picks_leading():
    s = Asym([Term(1, 1, 0), Term(2, 1, 0), Term(5, 0.5, 3)])
    assert len(s.terms) == 2
    assert s.leading == Term(3, 1, 0)
    sq = Asym.of(Term(1, 1, 0)) + Term(1, 0, 0)
    assert (sq**2).leading == Term(1, 2, 0)
    with pytest.raises(ValueError):
        Asym([Term(-1, 0, 0)])


@given(exps, scales)
def test_summed_matches_partial_sums(e, c):
    n = 200_000
    k = np.arange(1, n + 1, dtype=float)
    exact = math.fsum(c * k**e)
    t = summed(Term(c, e, 0))
    approx = t.scale * n**t.exponent
    assert abs(exact / approx - 1) < 5e-3 * (1 + e)


def test_summed_rejects_non_summable():
    with pytest.raises(ValueError):
        summed(Term(1, -1, 0))


@given(exps, scales, st.floats(0.0, 2.0))
def test_regvarseq_roundtrip_and_value(e, c, lp):
    s = RegVarSeq(e, c, lp)
    assert RegVarSeq.from_dict(s.to_dict()) == s
    assert s(1) == pytest.approx(c)
    assert s(np.array([1, 4]))[1] == pytest.approx(c * 4**e * (1 + math.log(4)) ** lp)


def test_regvarseq_validation():
    assert RegVarSeq.from_dict(3) == RegVarSeq(0.0, 3.0, 0.0)
    for bad in ({"exponent": -1}, {"scale": 0}, {"log_power": -0.5}, {"scale": math.inf}):
        with pytest.raises(ValueError):
            RegVarSeq.from_dict(bad)
    with pytest.raises(ValueError):
        RegVarSeq.from_dict({"slope": 1})
    with pytest.raises(ValueError):
        RegVarSeq(1.0)(0)
