"""Randomized normalization and uncertainty-bound invariants."""

import math

import numpy as np
from hypothesis import HealthCheck, given, settings
from hypothesis import strategies as st

from mechqsr import conditioning as cd
from mechqsr import phasespace as ps
from mechqsr.conditioning import BathParams, GaussianState
from mechqsr.hilbert import DensityMatrix, make_state
from mechqsr.probe import ProbeParams, default_pl_grid, homodyne_pdf


PROPERTY_CASES = {
    "density_matrix": 40,
    "grid": 30,
    "convolution": 20,
    "marginal": 40,
    "homodyne": 40,
    "conditioning": 60,
    "cooling": 40,
}


def cases(name):
    return settings(max_examples=PROPERTY_CASES[name], deadline=None,
                    suppress_health_check=[HealthCheck.too_slow])


@st.composite
def density_matrices(draw, max_dim=8):
    dim = draw(st.integers(2, max_dim))
    rank = draw(st.integers(1, dim))
    seed = draw(st.integers(0, 2 ** 32 - 1))
    rng = np.random.default_rng(seed)
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    # damp high levels so grids resolve comfortably
    g *= np.exp(-0.3 * np.arange(dim))[:, None]
    rho = g @ g.conj().T
    return DensityMatrix(rho / np.trace(rho).real)


@st.composite
def gaussian_states(draw):
    v1 = draw(st.floats(0.5, 50.0))
    v2 = draw(st.floats(0.25 / v1 + 1e-6, 50.0))
    # correlation bounded so det stays >= 1/4
    cmax = math.sqrt(max(v1 * v2 - 0.25, 0.0))
    c = draw(st.floats(-1.0, 1.0)) * cmax
    mean = [draw(st.floats(-5, 5)), draw(st.floats(-5, 5))]
    return GaussianState(mean, [[v1, c], [c, v2]])


probes = st.builds(ProbeParams, chi=st.floats(0.05, 20.0), omega=st.floats(-2, 2),
                   sigma_x=st.floats(0, 2), sigma_p=st.floats(0, 2))


@cases("density_matrix")
@given(density_matrices())
def test_density_matrix_invariants(rho):
    e = rho.elements
    assert np.abs(e - e.conj().T).max() < 1e-12
    assert abs(np.trace(e).real - 1) < 1e-12
    assert np.linalg.eigvalsh(e).min() > -1e-10


@cases("grid")
@given(density_matrices(max_dim=6), st.floats(-4.0, 0.0))
def test_grid_normalization(rho, s):
    grid = ps.quasiprob_grid(rho, s, n=128)
    assert abs(grid.integral() - 1) < 1e-3
    if s <= -1:
        assert grid.values.min() > -1e-9


@cases("convolution")
@given(density_matrices(max_dim=5), st.floats(0.01, 2.0))
def test_convolution_normalization(rho, ds):
    grid = ps.quasiprob_grid(rho, 0.0, half_extent=8.0, n=128)
    out = ps.convolve_to_s(grid, -ds)
    assert abs(out.integral() - 1) < 1e-3


@cases("marginal")
@given(density_matrices(), st.floats(0.0, math.pi, exclude_max=True))
def test_marginal_normalization(rho, theta):
    m = ps.marginal(rho, theta)
    assert abs(m.integral() - 1) < 1e-3
    assert m.density.min() >= 0


@cases("homodyne")
@given(st.sampled_from(["vacuum", "fock1", "cat"]), probes, st.floats(0.0, 3.0))
def test_homodyne_normalization(key, p, theta):
    rho = {"vacuum": make_state("fock", dim=3, n=0), "fock1": make_state("fock", dim=3, n=1),
           "cat": make_state("cat", dim=32, beta=1.7j)}[key]
    m = ps.marginal(rho, theta)
    pl = default_pl_grid(m, p, 4001)
    dens = homodyne_pdf(m, p, pl)
    assert abs(np.trapezoid(dens, pl) - 1) < 1e-3


@cases("conditioning")
@given(gaussian_states(), probes, st.lists(st.tuples(st.floats(-10, 10), st.floats(0, 7)), min_size=1,
                                           max_size=4),
       st.floats(0, 100), st.floats(10, 1e6))
def test_heisenberg_bound_survives_sequences(g, p, steps, nbar, quality):
    bath = BathParams(nbar, quality)
    for pl, theta in steps:
        g = cd.condition_on_outcome(g, p, pl)
        assert g.det >= 0.25 - 1e-9
        g = cd.free_evolution(g, theta, bath)
        assert g.det >= 0.25 - 1e-9


@cases("cooling")
@given(st.floats(0, 1e4), probes, st.floats(-5, 5), st.floats(-5, 5))
def test_cooling_outputs_physical(nbar, p, pl1, pl2):
    run = cd.cool_by_measurement(nbar, p, BathParams(nbar, 1e5), pl1, pl2)
    for _, state in run.steps:
        assert state.det >= 0.25 - 1e-9
    assert run.n_eff >= -1e-9


def test_property_case_budget():
    assert sum(PROPERTY_CASES.values()) >= 200
