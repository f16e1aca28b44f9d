"""The operator family I + V R0(lambda^2) and its inverses.

Potentials are carried as :class:`PotentialSpec` (diagonal multiplication)
or, for synthetic fixtures, as an arbitrary operator perturbation; every
routine here accepts either and works with the application matrix of
I + V R0(lambda^2).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import grids, resolvent
from .grids import (
    DenseOperator,
    GridFunction,
    Kind,
    lp_norm,
    operator_l1_norm,
)
from .resolvent import Branch, ResolventSpec

#: Condition-number cutoff defining NEAR_SINGULAR.
COND_CUTOFF = 1e12

#: Neumann-safe threshold for ||(V R0)^2||.
NEUMANN_SAFE = 0.25


class NearSingularError(ArithmeticError):
    """Inversion refused: condition estimate beyond the singularity cutoff."""

    def __init__(self, cond, context=""):
        self.cond = cond
        super().__init__(f"near-singular operator (cond ~ {cond:.3e}) {context}")


class NoContractionError(ArithmeticError):
    """Neumann series refused: contraction factor >= 1."""

    def __init__(self, factor):
        self.factor = factor
        super().__init__(f"no contraction: factor {factor:.3f} >= 1")


@dataclass(frozen=True)
class PotentialSpec:
    """Complex potential with its L^p / L^q composite norm."""

    name: str
    values: GridFunction
    p: float = 1.4
    q: float = 2.0
    metadata: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if not self.p < 1.5 < self.q:
            raise ValueError(f"need p < 3/2 < q, got p={self.p}, q={self.q}")

    @property
    def composite_norm(self):
        """max(||V||_p, ||V||_q) as 3-D norms.

        Potential samples are plain values V(node) in both modes (they are
        multipliers, not reduced waves), so the 3-D norm weights them with
        the volume weights directly.
        """
        vw = self.values.grid.volume_weights
        return max(
            lp_norm(self.values, self.p, weights=vw),
            lp_norm(self.values, self.q, weights=vw),
        )

    @property
    def epsilon(self):
        """Contraction exponent min(3/p - 2, 2 - 3/q)."""
        return min(3.0 / self.p - 2.0, 2.0 - 3.0 / self.q)

    def as_operator(self):
        """Multiplication operator by V.

        In radial mode the potential profile V(r) multiplies the reduced
        wave pointwise, so the diagonal holds V at each node radius.
        """
        return grids.diag_operator(self.values)


def potential_operator(V):
    """Coerce a PotentialSpec or DenseOperator into an operator."""
    if isinstance(V, PotentialSpec):
        return V.as_operator()
    if isinstance(V, DenseOperator):
        return V
    raise TypeError(f"potential must be PotentialSpec or DenseOperator, got {type(V)}")


def sample_potential(name, grid, fn, p=1.4, q=2.0):
    """Sample a radial potential profile V(|x|) as a multiplication operator spec.

    Unlike wave functions, potentials multiply pointwise, so the stored
    values are plain samples V(node) in both modes.
    """
    r = grid.radii
    return PotentialSpec(name, GridFunction(grid, np.asarray(fn(r), complex)), p, q)


def build_bs(V, grid, lam, sign=Branch.PLUS):
    """I + V R0(lambda^2 +/- i0) as a MATRIX operator (V = None means free)."""
    if V is None:
        return grids.identity_operator(grid)
    Vop = potential_operator(V)
    R0 = resolvent.build_R0(grid, ResolventSpec(lam, Branch(sign)))
    eff = np.eye(grid.size) + Vop.effective @ R0.effective
    return DenseOperator(grid, eff, Kind.MATRIX)


def direct_inverse(A, context=""):
    """Dense LU inverse with a condition estimate.

    Raises NearSingularError when the 1-norm condition estimate exceeds
    COND_CUTOFF; this is the numerical detector for threshold eigenvalues
    and resonances.
    """
    M = A.effective
    lu, piv = sla.lu_factor(M)
    anorm = np.linalg.norm(M, 1)
    with np.errstate(divide="ignore", over="ignore"):
        try:
            rcond = sla.lapack.zgecon(lu, anorm)[0]
        except Exception:
            rcond = 0.0
    cond = np.inf if rcond == 0 else 1.0 / rcond
    if not np.isfinite(cond) or cond > COND_CUTOFF:
        raise NearSingularError(cond, context)
    inv = sla.lu_solve((lu, piv), np.eye(M.shape[0], dtype=complex))
    out = DenseOperator(A.grid, inv, Kind.MATRIX)
    return out, float(cond)


def bs_inverse(V, grid, lam, sign=Branch.PLUS):
    """(I + V R0(lambda^2))^{-1} via dense LU."""
    op, _ = direct_inverse(build_bs(V, grid, lam, sign), context=f"lambda={lam}")
    return op


def high_energy_norm_scan(V, grid, lambda_list):
    """Scan ||(V R0(lambda^2))^2|| over lambda; flag the Neumann-safe point.

    Returns a dict with the norm table and lambda1, the smallest scanned
    lambda whose squared-factor norm falls below 1/4.
    """
    if len(lambda_list) == 0:
        raise ValueError("empty lambda list")
    Vop = potential_operator(V)
    norms = []
    for lam in lambda_list:
        R0 = resolvent.build_R0(grid, ResolventSpec(lam, Branch.PLUS))
        M = Vop.effective @ R0.effective
        norms.append(
            operator_l1_norm(DenseOperator(grid, M @ M, Kind.MATRIX))
        )
    norms = np.asarray(norms)
    safe = [l for l, n in zip(lambda_list, norms) if n < NEUMANN_SAFE]
    return {
        "lambda": list(map(float, lambda_list)),
        "norms": norms.tolist(),
        "lambda1": float(safe[0]) if safe else None,
    }


def uniform_inverse_scan(V, grid, lambda_grid):
    """Induced-L1 norms of (I + V R0(lambda^2))^{-1} over a lambda grid.

    Propagates NearSingularError (annotated with the offending lambda);
    a hit signals an embedded eigenvalue or resonance in the scenario.
    """
    norms = []
    for lam in lambda_grid:
        inv, _ = direct_inverse(build_bs(V, grid, lam), context=f"lambda={lam}")
        norms.append(operator_l1_norm(inv))
    norms = np.asarray(norms)
    imax = int(np.argmax(norms))
    return {
        "lambda": list(map(float, lambda_grid)),
        "norms": norms.tolist(),
        "sup": float(norms[imax]),
        "argmax_lambda": float(lambda_grid[imax]),
    }


def smooth_cutoff(t):
    """C-infinity plateau cutoff: 1 on |t| <= 1, 0 on |t| >= 2.

    Built from the standard exp(-1/x) partition ramp.
    """
    t = np.abs(np.asarray(t, dtype=float))
    out = np.zeros_like(t)
    out[t <= 1.0] = 1.0
    mid = (t > 1.0) & (t < 2.0)
    if np.any(mid):
        s = 2.0 - t[mid]  # in (0, 1)
        g1 = np.exp(-1.0 / s)
        g2 = np.exp(-1.0 / (1.0 - s))
        out[mid] = g1 / (g1 + g2)
    return out


def local_neumann_inverse(V, grid, lambda0, r, lam, tol=1e-12, max_terms=200):
    """Local Neumann series for (I + V R0(lambda^2))^{-1} around lambda0.

    Sums (-S0 V B_{l0}(lambda^2))^m S0 with S0 the dense inverse at the
    benchmark energy, stopping when the term norm falls below tol.
    Returns (operator, contraction_factor).
    """
    if abs(lam - lambda0) > r:
        raise ValueError(f"|lambda - lambda0| = {abs(lam - lambda0)} exceeds window {r}")
    S0, _ = direct_inverse(build_bs(V, grid, lambda0), context=f"lambda0={lambda0}")
    Vop = potential_operator(V)
    B = resolvent.build_B(grid, lambda0, lam)
    step = -(S0.effective @ Vop.effective @ B.effective)
    factor = operator_l1_norm(DenseOperator(grid, -step, Kind.MATRIX))
    if factor >= 1.0:
        raise NoContractionError(factor)
    total = S0.effective.copy()
    term = S0.effective
    for _ in range(max_terms):
        term = step @ term
        total += term
        if operator_l1_norm(DenseOperator(grid, term, Kind.MATRIX)) < tol:
            break
    return DenseOperator(grid, total, Kind.MATRIX), float(factor)
