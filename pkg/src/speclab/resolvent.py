"""Free-resolvent kernels R0(lambda^2 +/- i0) and their differences.

The 3-D kernel is e^{+/- i lambda |x-y|} / (4 pi |x-y|).  In radial s-wave
mode the operators act on reduced waves u = r psi with the half-line kernel

    G_lambda(r, r') = sin(lambda r_<) e^{+/- i lambda r_>} / lambda

(r_< for lambda = 0), which is the Green's function of -d^2/dr^2 with a
Dirichlet condition at r = 0.  At lambda = 0 the sampled kernel matrix is the
exact two-sided inverse of the discrete radial Laplacian assembled in
:mod:`speclab.evolution`, which keeps the threshold identities sharp.

Difference kernels B_{l0}(lambda^2) = R0(lambda^2) - R0(l0^2) are evaluated
from the subtracted closed form so the diagonal stays finite.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np
from scipy.spatial.distance import cdist

from .grids import DenseOperator, Kind, Mode, lp_norm

#: Mean of 1/|z| over the unit cube centered at the origin; the cell-averaged
#: diagonal of 1/(4 pi |x-y|) kernels is this value / (4 pi h).
UNIT_CUBE_INV_DIST_MEAN = 2.380077363979553


class Branch(enum.IntEnum):
    PLUS = 1
    MINUS = -1


@dataclass(frozen=True)
class ResolventSpec:
    """Spectral point lambda (energy z = lambda^2) and branch choice."""

    lam: float
    sign: Branch = Branch.PLUS


def free_kernel_3d(spec, d):
    """3-D free-resolvent kernel e^{i s lambda d} / (4 pi d), d = |x - y| > 0."""
    d = np.asarray(d, dtype=float)
    if np.any(d <= 0):
        raise ValueError("distance must be positive")
    return np.exp(1j * spec.sign * spec.lam * d) / (4.0 * np.pi * d)


def free_kernel_radial(spec, r, rp):
    """Reduced s-wave kernel sin(lambda r_<) e^{i s lambda r_>} / lambda.

    Limits to r_< as lambda -> 0.  Symmetric in (r, r').
    """
    r = np.asarray(r, dtype=float)
    rp = np.asarray(rp, dtype=float)
    if np.any(r <= 0) or np.any(rp <= 0):
        raise ValueError("radii must be positive")
    lo = np.minimum(r, rp)
    hi = np.maximum(r, rp)
    if spec.lam == 0:
        return lo.astype(complex)
    lam = spec.lam
    return np.sin(lam * lo) * np.exp(1j * spec.sign * lam * hi) / lam


def _distance_matrix(grid):
    if grid.mode is Mode.RADIAL_SWAVE:
        raise ValueError("3-D distances undefined for radial grids")
    return cdist(grid.nodes, grid.nodes)


def build_R0(grid, spec):
    """Assemble the free resolvent as a KERNEL operator on the grid."""
    if grid.mode is Mode.RADIAL_SWAVE:
        r = grid.nodes
        K = free_kernel_radial(spec, r[:, None], r[None, :])
        return DenseOperator(grid, K, Kind.KERNEL)
    d = _distance_matrix(grid)
    np.fill_diagonal(d, 1.0)  # placeholder, overwritten below
    K = free_kernel_3d(spec, d)
    diag = (UNIT_CUBE_INV_DIST_MEAN / grid.spacing + 1j * spec.sign * spec.lam) / (
        4.0 * np.pi
    )
    np.fill_diagonal(K, diag)
    return DenseOperator(grid, K, Kind.KERNEL)


def _b_kernel_radial(lam0, lam, sign, r, rp):
    lo = np.minimum(r, rp)
    hi = np.maximum(r, rp)

    def g(l):
        if l == 0:
            return lo.astype(complex)
        return np.sin(l * lo) * np.exp(1j * sign * l * hi) / l

    return g(lam) - g(lam0)


def build_B(grid, lambda0, lam, sign=Branch.PLUS):
    """Difference operator B_{lambda0}(lambda^2) = R0(lambda^2) - R0(lambda0^2).

    In 3-D the kernel (e^{i s lam d} - e^{i s lam0 d}) / (4 pi d) has the
    finite diagonal limit i s (lam - lam0) / (4 pi).
    """
    sign = Branch(sign)
    if grid.mode is Mode.RADIAL_SWAVE:
        r = grid.nodes
        K = _b_kernel_radial(lambda0, lam, sign, r[:, None], r[None, :])
        return DenseOperator(grid, K, Kind.KERNEL)
    d = _distance_matrix(grid)
    np.fill_diagonal(d, 1.0)
    K = (
        np.exp(1j * sign * lam * d) - np.exp(1j * sign * lambda0 * d)
    ) / (4.0 * np.pi * d)
    np.fill_diagonal(K, 1j * sign * (lam - lambda0) / (4.0 * np.pi))
    return DenseOperator(grid, K, Kind.KERNEL)


def column_lp_norm_3d(lam, mu, pprime, r_max, n=20000):
    """L^{p'}(R^3) norm of the 3-D difference-kernel column for shift centers.

    The difference kernel is translation invariant, so every column has the
    same norm; it is computed by radial quadrature out to r_max.
    """
    h = r_max / n
    r = (np.arange(n) + 0.5) * h
    vals = np.abs(np.exp(1j * lam * r) - np.exp(1j * mu * r)) / (4.0 * np.pi * r)
    return float(np.sum(4.0 * np.pi * r**2 * vals**pprime * h) ** (1.0 / pprime))


def kernel_difference_check(grid, V, lambda_list, mu=0.0, p=1.4):
    """Measure L^{p'} norms of R0(lambda^2) - R0(mu^2) and fit the growth rate.

    Returns a dict with the per-lambda norms, the fitted exponent in
    |lambda - mu|, the predicted exponent 1 - 3/p', and a pass flag that is
    false when the fit falls more than 0.15 below the prediction.
    """
    lams = [l for l in lambda_list if l != mu]
    if len(lams) < 4:
        raise ValueError("need at least 4 distinct lambda values to fit")
    pprime = p / (p - 1.0)
    r_max = 40.0 * grid.extent
    norms = np.array([column_lp_norm_3d(l, mu, pprime, r_max) for l in lams])
    gaps = np.abs(np.asarray(lams) - mu)
    slope, intercept = np.polyfit(np.log(gaps), np.log(norms), 1)
    predicted = 1.0 - 3.0 / pprime
    return {
        "lambda": list(map(float, lams)),
        "norms": norms.tolist(),
        "fitted_exponent": float(slope),
        "predicted_exponent": float(predicted),
        "ok": bool(slope >= predicted - 0.15),
    }


def resolvent_identity_residual(grid, lam, sign=Branch.PLUS):
    """Induced-L1 residual of R0(l^2) - (I + l^2 R0(l^2)) R0(0)."""
    from .grids import add, compose, identity_operator, operator_l1_norm, scale

    spec = ResolventSpec(lam, Branch(sign))
    R = build_R0(grid, spec)
    R00 = build_R0(grid, ResolventSpec(0.0, Branch(sign)))
    rhs = compose(add(identity_operator(grid), scale(R, lam**2)), R00)
    resid = DenseOperator(grid, R.effective - rhs.effective, Kind.MATRIX)
    return operator_l1_norm(resid)
