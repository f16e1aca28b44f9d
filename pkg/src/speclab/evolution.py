"""Discretized Hamiltonian, propagator, and dispersive-decay measurements.

The radial Laplacian acts on the reduced wave u = r psi with a Dirichlet
ghost at the origin and a Neumann ghost at r = L.  This boundary pair is
chosen so that the discretized free H0 and the sampled zero-energy kernel
R0(0) = min(r, r') are *exact* inverses of each other: the kernel is the
Green's function for u(0) = 0, u'(L) = 0, and it is piecewise linear, which
the 3-point stencil differentiates exactly.  All the threshold machinery
inherits machine-precision identities from this pairing.  (The price: free
eigenvalues are ((n + 1/2) pi / L)^2 rather than the Dirichlet-at-L values.)
"""

from __future__ import annotations

import csv
import enum
from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import birman, grids
from .grids import DenseOperator, GridFunction, Kind, Mode


class Method(enum.Enum):
    EXPM_SQUARING = "expm_squaring"
    EIGEN_DECOMP = "eigen_decomp"


class NearDefectiveError(ArithmeticError):
    """Eigendecomposition rejected: eigenvector basis too ill-conditioned."""


def _free_laplacian_radial(grid):
    M, h = grid.size, grid.spacing
    main = np.full(M, 2.0)
    main[0] = 3.0  # Dirichlet ghost u_{-1} = -u_0
    main[-1] = 1.0  # Neumann ghost u_M = u_{M-1}
    H = np.diag(main) + np.diag(np.full(M - 1, -1.0), 1) + np.diag(
        np.full(M - 1, -1.0), -1
    )
    return H / h**2


def _free_laplacian_box(grid):
    n = round(grid.size ** (1 / 3))
    h = grid.spacing
    eye = np.eye(n)
    D = 2.0 * eye - np.diag(np.ones(n - 1), 1) - np.diag(np.ones(n - 1), -1)
    H = (
        np.kron(np.kron(D, eye), eye)
        + np.kron(np.kron(eye, D), eye)
        + np.kron(np.kron(eye, eye), D)
    )
    return H / h**2


def discretize_H(V, grid):
    """H = -Delta_grid + V as a complex symmetric MATRIX operator.

    V may be a PotentialSpec, a DenseOperator perturbation (fixtures), or
    None for the free operator.
    """
    if grid.mode is Mode.RADIAL_SWAVE:
        H = _free_laplacian_radial(grid)
    else:
        H = _free_laplacian_box(grid)
    H = H.astype(complex)
    if V is not None:
        H = H + birman.potential_operator(V).effective
    return DenseOperator(grid, H, Kind.MATRIX)


@dataclass(frozen=True)
class PropagatorPlan:
    """Hamiltonian, time grid, method, and the reflection horizon T_max."""

    H: DenseOperator
    times: np.ndarray
    method: Method = Method.EXPM_SQUARING
    T_max: float = np.inf
    T_fit_min: float = 2.0

    def __post_init__(self):
        t = np.asarray(self.times, dtype=float)
        if np.any(np.diff(t) <= 0):
            raise ValueError("time grid must be strictly increasing")
        t.setflags(write=False)
        object.__setattr__(self, "times", t)


def reflection_horizon(grid, k_max=None):
    """Ballistic estimate 0.8 L / (2 k_max) of the boundary-reflection time.

    k_max defaults to the grid Nyquist pi/h; when the initial data's
    spectral content is known to be narrower, passing its own k_max gives a
    usable (much later) horizon.
    """
    if k_max is None:
        k_max = np.pi / grid.spacing
    return 0.8 * grid.extent / (2.0 * k_max)


def make_plan(V, grid, times, method=Method.EXPM_SQUARING, k_max=None, T_fit_min=2.0):
    H = discretize_H(V, grid)
    return PropagatorPlan(H, np.asarray(times, float), method,
                          reflection_horizon(grid, k_max), T_fit_min)


def propagate(plan, f):
    """States e^{-i t_k H} f for every t_k in the plan's time grid."""
    H = plan.H.effective
    grid = plan.H.grid
    if plan.method is Method.EIGEN_DECOMP:
        evals, W = np.linalg.eig(H)
        cond = np.linalg.cond(W)
        if cond > 1e6:
            raise NearDefectiveError(f"eigenvector condition {cond:.3e} > 1e6")
        coef = np.linalg.solve(W, f.values)
        return [
            GridFunction(grid, W @ (np.exp(-1j * t * evals) * coef))
            for t in plan.times
        ]
    # Scaling-and-squaring path: one expm per distinct step length, powered.
    cache = {}

    def stepper(dt):
        key = round(dt, 15)
        if key not in cache:
            cache[key] = sla.expm(-1j * dt * H)
        return cache[key]

    out = []
    state = f.values
    prev = 0.0
    for t in plan.times:
        dt = t - prev
        if dt > 0:
            state = stepper(dt) @ state
        out.append(GridFunction(grid, state))
        prev = t
    return out


def free_evolution_radial(grid, f, t):
    """Analytic free evolution on the half line via the image method.

    u(r, t) = integral of [K(r - r') - K(r + r')] u0(r') dr' with the
    complex Gaussian K(x) = (4 pi i t)^{-1/2} e^{i x^2 / 4t}; this is the
    infinite-domain radial s-wave evolution (exact until boundary effects).
    """
    if grid.mode is not Mode.RADIAL_SWAVE:
        raise ValueError("analytic free evolution implemented for radial grids")
    if t == 0:
        return f
    r = grid.nodes
    amp = np.exp(-1j * np.pi / 4 * np.sign(t)) / np.sqrt(4.0 * np.pi * abs(t))
    K = lambda x: amp * np.exp(1j * x**2 / (4.0 * t))
    kernel = K(r[:, None] - r[None, :]) - K(r[:, None] + r[None, :])
    return GridFunction(grid, kernel @ (grid.weights * f.values))


def _inner_mask(grid):
    return grid.radii <= 0.5 * grid.extent


def _fit_loglog(ts, vals):
    x, y = np.log(ts), np.log(vals)
    A = np.column_stack([x, np.ones_like(x)])
    coef, res, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope, intercept = coef
    dof = max(len(x) - 2, 1)
    resid = y - A @ coef
    s2 = float(resid @ resid) / dof
    xvar = float(np.sum((x - x.mean()) ** 2))
    stderr = np.sqrt(s2 / xvar) if xvar > 0 else np.inf
    return float(slope), float(stderr), float(np.exp(intercept))


def dispersive_scan(plan, f, P=None):
    """Sup-norm decay table and fitted exponent for e^{-itH}(I - P) f.

    Sup norms are taken over the 3-D profile on the inner half of the domain
    (the boundary layer is polluted first); the log-log fit runs over the
    window [T_fit_min, T_max] intersected with the time grid.
    """
    grid = plan.H.grid
    g = f if P is None else GridFunction(
        grid, f.values - P.effective @ f.values
    )
    states = propagate(plan, g)
    mask = _inner_mask(grid)
    sups, l2s = [], []
    for st in states:
        prof = grids.profile_values(st)
        sups.append(float(np.abs(prof[mask]).max()))
        l2s.append(grids.profile_lp_norm(st, 2))
    sups = np.asarray(sups)
    sel = (plan.times >= plan.T_fit_min) & (plan.times <= plan.T_max)
    if np.sum(sel) < 2 or plan.times[sel].max() / plan.times[sel].min() < np.sqrt(10):
        raise ValueError("fit window shorter than half a decade in t")
    slope, stderr, const = _fit_loglog(plan.times[sel], sups[sel])
    return {
        "t": plan.times.tolist(),
        "sup_norm": sups.tolist(),
        "l2_norm": l2s,
        "exponent": slope,
        "stderr": stderr,
        "constant": const,
        "fit_window": [float(plan.times[sel].min()), float(plan.times[sel].max())],
        "T_max": float(plan.T_max),
    }


def l2_stability_scan(plan, f, P=None):
    """Table of 3-D L^2 norms of e^{-itH}(I - P) f and the sup ratio."""
    grid = plan.H.grid
    g = f if P is None else GridFunction(
        grid, f.values - P.effective @ f.values
    )
    base = grids.profile_lp_norm(f, 2)
    states = propagate(plan, g)
    norms = [grids.profile_lp_norm(st, 2) for st in states]
    return {
        "t": plan.times.tolist(),
        "l2_norm": norms,
        "ratio_sup": float(max(norms) / base) if base > 0 else np.inf,
    }


def stone_check(V, grid, f, t, lambda_cap, n_quad, P=None):
    """Stone-formula cross-check of the propagator.

    Compares e^{-itH}(I - P) f against the spectral integral
    (1 / 2 pi i) int_0^Lambda e^{-i t E} [R_V^+(E) - R_V^-(E)] f dE
    with midpoint quadrature (offset from 0 by half a step, which also
    avoids a nontrivial threshold space).  Returns the relative sup-norm
    discrepancy of the profiles.
    """
    from . import resolvent
    from .resolvent import Branch, ResolventSpec

    plan = make_plan(V, grid, [t])
    g = f if P is None else GridFunction(grid, f.values - P.effective @ f.values)
    lhs = propagate(plan, g)[0]
    dE = lambda_cap / n_quad
    acc = np.zeros(grid.size, complex)
    for j in range(n_quad):
        E = (j + 0.5) * dE
        lam = np.sqrt(E)
        jump = np.zeros(grid.size, complex)
        for sign in (Branch.PLUS, Branch.MINUS):
            R0 = resolvent.build_R0(grid, ResolventSpec(lam, sign))
            inv, _ = birman.direct_inverse(
                birman.build_bs(V, grid, lam, sign), context=f"E={E}"
            )
            RV = R0.effective @ inv.effective
            jump += int(sign) * (RV @ g.values)
        acc += np.exp(-1j * t * E) * jump * dE
    rhs = GridFunction(grid, acc / (2j * np.pi))
    lp, rp = grids.profile_values(lhs), grids.profile_values(rhs)
    mask = _inner_mask(grid)
    denom = np.abs(lp[mask]).max()
    return float(np.abs((lp - rp)[mask]).max() / denom)


def write_decay_csv(report, path):
    """Decay report to CSV: t, sup_norm, l2_norm, fitted_exponent, fit_window, T_max."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "sup_norm", "l2_norm", "fitted_exponent", "fit_window", "T_max"])
        lo, hi = report["fit_window"]
        for t, s, l2 in zip(report["t"], report["sup_norm"], report["l2_norm"]):
            w.writerow([t, s, l2, report["exponent"], f"{lo}:{hi}", report["T_max"]])
