import numpy as np
import pytest

from speclab import evolution, grids, potentials
from speclab.grids import GridFunction, Mode


def test_exact_eigen_closed_form_null_vector():
    # V = Delta psi_s / psi_s annihilates psi_s analytically; the discrete
    # residual of H (r psi_s) is O(h^2)
    res = []
    for M in (200, 400):
        g = grids.make_grid(Mode.RADIAL_SWAVE, 20.0, M)
        V = potentials.exact_eigen(g, s=2.0)
        H = evolution.discretize_H(V, g).effective
        u = g.nodes * potentials.exact_eigen_profile(2.0)(g.nodes)
        res.append(np.abs(H @ u).max())
    assert res[0] < 0.1
    # halving h divides the residual by about 4
    assert res[0] / res[1] == pytest.approx(4.0, rel=0.3)


def test_exact_eigen_tail_is_inverse_square():
    g = grids.make_grid(Mode.RADIAL_SWAVE, 40.0, 400)
    V = potentials.exact_eigen(g, s=2.0)
    r = g.nodes
    tail = V.values.values[r > 20].real * r[r > 20] ** 2
    # r^2 V -> 4 s^2 - 2 s = 12 at infinity
    assert np.all(np.abs(tail - 12.0) < 1.0)


def test_tune_coupling_lands_on_singularity(grid20):
    tuned, c, info = potentials.tune_coupling(
        potentials.exact_eigen(grid20, s=2.0), grid20
    )
    # the tuned Birman-Schwinger matrix has an exact -1 eigenvalue
    from speclab import birman

    A = birman.build_bs(tuned, grid20, 0.0)
    ev = np.linalg.eigvals(A.effective)
    assert np.abs(ev).min() < 1e-10
    # the coupling renormalization is a small grid correction
    assert abs(c - 1.0) < 0.05
    # the returned state is in the kernel of the discretized H
    H = evolution.discretize_H(tuned, grid20).effective
    assert np.abs(H @ info["state"].values).max() < 1e-8


def test_threshold_moment_vanishes_for_eigenvalue_class():
    # int r V u vanishes in the infinite-volume limit for the eigenvalue
    # class; on a truncated domain the defect shrinks ~ L^-3
    moments = []
    for L in (20.0, 40.0):
        g = grids.make_grid(Mode.RADIAL_SWAVE, L, 400)
        tuned, _, info = potentials.tune_coupling(
            potentials.exact_eigen(g, s=2.0), g
        )
        moments.append(abs(potentials.threshold_moment(info["state"], tuned)))
    assert moments[1] < 2e-4
    assert moments[1] < moments[0] / 4.0


def test_gaussian_well_values(grid20):
    V = potentials.gaussian_well(grid20, depth=4.0, width=1.0)
    assert V.values.values[0].real == pytest.approx(
        -4.0 * np.exp(-grid20.nodes[0] ** 2), rel=1e-12
    )
    assert np.all(V.values.values.imag == 0.0)


def test_complex_perturbed_moves_spectrum(grid20):
    base = potentials.gaussian_well(grid20, depth=5.0, width=1.0)
    V = potentials.complex_perturbed(grid20, base=base, gamma=1.5, width=1.0)
    assert np.isfinite(V.composite_norm)
    H = evolution.discretize_H(V, grid20).effective
    assert np.abs(H - H.conj().T).max() > 0.1  # non-Hermitian
    assert np.abs(H - H.T).max() < 1e-12  # still complex symmetric
    ev = np.linalg.eigvals(H)
    assert np.abs(ev.imag).max() > 0.3
