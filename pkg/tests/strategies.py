"""Hypothesis strategies shared by unit and acceptance tests."""
import numpy as np
from hypothesis import strategies as st

from fedsilo.fedproto import BROADCAST, UPLOAD, RoundMessage, Update
from fedsilo.fedproto.codec import MAX_RANK
from fedsilo.numcore import ParameterVector

_floats = st.floats(allow_nan=True, allow_infinity=True, allow_subnormal=True, width=64)


@st.composite
def arrays(draw):
    if draw(st.integers(0, 20)) == 0:
        return np.array(draw(_floats)).reshape((1,) * MAX_RANK)
    shape = tuple(draw(st.lists(st.integers(0, 4), max_size=4)))
    n = int(np.prod(shape, dtype=np.int64))
    values = draw(st.lists(_floats, min_size=n, max_size=n))
    return np.array(values, dtype=np.float64).reshape(shape)


@st.composite
def messages(draw):
    names = draw(st.lists(st.text(min_size=0, max_size=12), max_size=5, unique=True))
    segs = ParameterVector([(n, draw(arrays())) for n in names])
    direction = draw(st.sampled_from([BROADCAST, UPLOAD]))
    n_k = draw(st.integers(1, 2**64 - 1)) if direction == UPLOAD else draw(st.integers(0, 2**64 - 1))
    return RoundMessage(direction, draw(st.integers(0, 2**32 - 1)), segs, draw(st.integers(0, 2**32 - 1)), n_k)


@st.composite
def update_sets(draw, max_total=20):
    """1-5 client updates with random segment shapes, at most ``max_total`` scalars each."""
    k = draw(st.integers(1, 5))
    rng = np.random.default_rng(draw(st.integers(0, 2**32)))
    shapes, total = [], 0
    for _ in range(draw(st.integers(1, 4))):
        s = tuple(draw(st.lists(st.integers(1, 7), min_size=0, max_size=2)))
        if total + int(np.prod(s)) <= max_total:
            shapes.append(s)
            total += int(np.prod(s))
    shapes = shapes or [(3,)]
    scale = 10.0 ** draw(st.integers(-3, 3))
    ups = []
    for cid in rng.permutation(np.arange(1, k + 1)):
        w = ParameterVector([(f"s{j}", rng.normal(size=s) * scale) for j, s in enumerate(shapes)])
        ups.append(Update(int(cid), w, int(rng.integers(0 if k > 1 else 1, 1000))))
    if sum(u.n_k for u in ups) == 0:
        ups[0] = ups[0]._replace(n_k=1)
    return ups
