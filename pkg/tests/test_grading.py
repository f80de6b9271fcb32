from hypothesis import given, strategies as st

from gvbundle.grading import GradedDimension, gdim_convolve, gdim_dual, gdim_shift, parity

dims = st.dictionaries(st.integers(-4, 4), st.integers(0, 3), max_size=5).map(GradedDimension.of)


def test_from_degrees_counts():
    d = GradedDimension.from_degrees([0, 1, 1, -2])
    assert d.counts == {-2: 1, 0: 1, 1: 2}
    assert d.total() == 4
    assert d[5] == 0


def test_zero_counts_dropped():
    assert GradedDimension.of({0: 2, 3: 0}) == GradedDimension.of({0: 2})


def test_parity():
    assert [parity(k) for k in (-3, -2, 0, 1, 4)] == [1, 0, 0, 1, 0]


def test_shift_and_dual_examples():
    d = GradedDimension.of({0: 1, 1: 2})
    assert gdim_shift(d, 1).counts == {-1: 1, 0: 2}
    assert gdim_dual(d).counts == {0: 1, -1: 2}


def test_convolve_example():
    a = GradedDimension.of({0: 1, 1: 1})
    assert gdim_convolve(a, a).counts == {0: 1, 1: 2, 2: 1}


@given(dims)
def test_dual_involution(d):
    assert gdim_dual(gdim_dual(d)) == d


@given(dims, st.integers(-5, 5))
def test_shift_inverse(d, k):
    assert gdim_shift(gdim_shift(d, k), -k) == d


@given(dims, dims)
def test_convolve_total_and_dual(a, b):
    c = gdim_convolve(a, b)
    assert c.total() == a.total() * b.total()
    assert gdim_dual(c) == gdim_convolve(gdim_dual(a), gdim_dual(b))
    assert c == gdim_convolve(b, a)
