import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from riseig._validation import DomainError
from riseig.channel_model import ChannelSet, compose_effective, gen_rayleigh
from riseig.gram_decomposition import (
    GramDecomposition,
    assemble_q,
    augment_phase,
    controllable_ev_count,
    decompose,
    decompose_channels,
    trace_budget_bound,
)

from conftest import random_channels, unimodular


def rel_gram_error(ch, theta):
    h = compose_effective(ch, theta)
    g = h @ h.conj().T
    dec = decompose_channels(ch)
    return np.linalg.norm(g - dec.c_matrix - assemble_q(dec, theta)) / np.linalg.norm(g)


def test_augment_phase():
    tb = augment_phase(np.array([1j, -1.0]))
    np.testing.assert_array_equal(tb, [1j, -1.0, 1.0])


def test_zero_h_s(rng):
    h_d = gen_rayleigh(rng, 3, 4)
    dec = decompose(h_d, gen_rayleigh(rng, 3, 5), np.zeros((5, 4)))
    assert dec.rank_s == 0
    np.testing.assert_allclose(dec.c_matrix, h_d @ h_d.conj().T, atol=1e-14)
    assert np.all(assemble_q(dec, unimodular(rng, 5)) == 0)
    assert trace_budget_bound(dec) == 0.0


def test_rank_one_projector(rng):
    ch = random_channels(rng, 3, 4, 6, rank=1)
    dec = decompose_channels(ch)
    assert dec.rank_s == 1
    v = dec.svd_triplets[0][2]
    np.testing.assert_allclose(dec.projector, np.eye(4) - np.outer(v, v.conj()), atol=1e-14)


def test_identity_fixed_instance(rng):
    ch = random_channels(rng, 3, 4, 5)
    for _ in range(20):
        assert rel_gram_error(ch, unimodular(rng, 5)) < 1e-10


def test_multi_ris_concatenation(rng):
    parts = [(gen_rayleigh(rng, 3, n), gen_rayleigh(rng, n, 4)) for n in (3, 4)]
    ch = ChannelSet(gen_rayleigh(rng, 3, 4), [p[0] for p in parts], [p[1] for p in parts])
    assert rel_gram_error(ch, unimodular(rng, 7)) < 1e-10


@settings(max_examples=100, deadline=None)
@given(
    st.integers(0, 2**32 - 1),
    st.integers(2, 6),
    st.integers(0, 10),
    st.integers(1, 32),
    st.data(),
)
def test_identity_property(seed, r, extra_bs, n_ris, data):
    n_bs = r + extra_bs
    rank = data.draw(st.integers(1, min(n_ris, n_bs)))
    rng = np.random.default_rng(seed)
    ch = random_channels(rng, r, n_bs, n_ris, rank=rank)
    dec = decompose_channels(ch)
    assert dec.rank_s == rank
    assert rel_gram_error(ch, unimodular(rng, n_ris)) < 1e-10

    p = dec.projector
    assert np.linalg.norm(p @ p - p) < 1e-10
    assert np.linalg.norm(p - p.conj().T) < 1e-12

    q = assemble_q(dec, unimodular(rng, n_ris))
    ev = np.sort(np.linalg.eigvalsh(q))[::-1]
    if rank < r:
        assert np.all(ev[rank:] < 1e-10 * max(ev[0], 1e-300))


def test_rank_one_q(rng):
    dec = decompose_channels(random_channels(rng, 4, 5, 6, rank=1))
    th = unimodular(rng, 6)
    tb = augment_phase(th)
    d = dec.d_factors[0] @ tb
    np.testing.assert_allclose(assemble_q(dec, th), np.outer(d, d.conj()), atol=1e-12)


def test_interlacing_rank_one_and_direct(rng):
    for _ in range(100):
        ch = random_channels(rng, 5, 8, 10, rank=1)
        dec = decompose_channels(ch)
        phi = np.sort(np.linalg.eigvalsh(dec.c_matrix))[::-1]
        for lam_src in (compose_effective(ch, unimodular(rng, 10)), ch.h_direct):
            lam = np.sort(np.linalg.eigvalsh(lam_src @ lam_src.conj().T))[::-1]
            slack = 1e-9 * lam[0]
            assert np.all(phi - slack <= lam)
            assert np.all(lam[1:] <= phi[:-1] + slack)


def test_trace_budget_identity_m():
    # one D with D^H D = I: lambda_max = 1
    d = np.eye(4, dtype=complex)
    dec = GramDecomposition(np.zeros((4, 4), complex), [d], [(1.0, None, None)], np.eye(2))
    assert trace_budget_bound(dec) == pytest.approx(4.0)
    assert dec.n_ris == 3


def test_trace_budget_random_search(rng):
    dec = decompose_channels(random_channels(rng, 3, 4, 4, rank=2))
    bound = trace_budget_bound(dec)
    best = max(np.real(np.trace(assemble_q(dec, unimodular(rng, 4)))) for _ in range(10_000))
    assert bound >= best


def test_controllable_ev_count():
    assert controllable_ev_count([1]) == 1
    assert controllable_ev_count([1, 1, 2]) == 4
    assert controllable_ev_count([]) == 0
    with pytest.raises(DomainError):
        controllable_ev_count([-1])


def test_bad_inputs(rng):
    with pytest.raises(DomainError):
        decompose(gen_rayleigh(rng, 2, 3), gen_rayleigh(rng, 2, 4), gen_rayleigh(rng, 3, 3))
    with pytest.raises(DomainError):
        decompose(gen_rayleigh(rng, 2, 3), gen_rayleigh(rng, 2, 4), gen_rayleigh(rng, 4, 3), rank_tolerance=0.0)
    dec = decompose_channels(random_channels(rng, 2, 3, 4))
    with pytest.raises(DomainError):
        assemble_q(dec, unimodular(rng, 3))
