import numpy as np
import pytest

from cogarch_symbol import StatePoint, empirical_characteristics_check, estimate_symbol, martingale_residual
from cogarch_symbol.generator import gaussian_bump
from cogarch_symbol.rng import chunk_generator, chunk_sizes, fsum_arrays, map_chunks
from conftest import atom_params


def test_chunk_streams_are_reproducible_and_distinct():
    a = chunk_generator(5, 2).random(4)
    assert np.array_equal(a, chunk_generator(5, 2).random(4))
    assert not np.array_equal(a, chunk_generator(5, 3).random(4))
    assert not np.array_equal(a, chunk_generator(6, 2).random(4))


def test_chunk_partition():
    assert chunk_sizes(10_000, 4096) == [4096, 4096, 1808]
    assert sum(chunk_sizes(1, 4096)) == 1


def test_map_chunks_order_independent_of_workers():
    fn = lambda k, m: (k, m)
    assert map_chunks(fn, 10_000, 1000, 1) == map_chunks(fn, 10_000, 1000, 4)


def test_fsum_is_order_independent():
    parts = [np.array([1e16, 1.0]), np.array([-1e16, 1.0]), np.array([1.0, 1e-16])]
    assert np.array_equal(fsum_arrays(parts), fsum_arrays(parts[::-1]))
    assert fsum_arrays(parts)[0] == 1.0


@pytest.mark.parametrize("workers", [2, 3])
def test_estimates_independent_of_workers(workers):
    p = atom_params()
    kw = dict(n_paths=10_000, seed=7, chunk_size=1024)
    a = estimate_symbol(StatePoint(0, 0), (1.0, -1.0), p, workers=1, **kw)
    b = estimate_symbol(StatePoint(0, 0), (1.0, -1.0), p, workers=workers, **kw)
    assert abs(a.estimate - b.estimate) <= 1e-12
    assert a == b


def test_residual_and_characteristics_independent_of_workers():
    p = atom_params()
    f = gaussian_bump((0, 0), 1.0)
    kw = dict(n_paths=5000, seed=3, chunk_size=512)
    assert martingale_residual(f, StatePoint(0, 0), p, 0.5, workers=1, **kw) == \
        martingale_residual(f, StatePoint(0, 0), p, 0.5, workers=4, **kw)
    r1 = empirical_characteristics_check(p, StatePoint(0, 0), 0.5, test_sets=[(0.45, 0.6, 0.1, 0.15)],
                                         workers=1, **kw)
    r4 = empirical_characteristics_check(p, StatePoint(0, 0), 0.5, test_sets=[(0.45, 0.6, 0.1, 0.15)],
                                         workers=4, **kw)
    assert r1 == r4
