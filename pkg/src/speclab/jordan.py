"""Zero-energy threshold machinery: filtration, Jordan chains, projections.

The generalized null space X = union of X_k = ker H^k is built through the
resolvent route (Psi in X_{k+1} iff (I + R0(0) V) Psi = R0(0) Phi for some
Phi in X_k), then H restricted to X is brought to a self-dual Jordan basis:
chains psi_{1,k}, ..., psi_{k,k} with H psi_{j,k} = psi_{j-1,k} whose Gram
matrix under the *bilinear* (unconjugated) pairing is the antidiagonal 0/1
pattern pair(psi_{j1,k}, psi_{j2,k}) = delta_{j1+j2 = k+1}.

The basis construction works for any nilpotent matrix N that is symmetric
with respect to a nondegenerate symmetric bilinear form B; that abstract
version (`jordan_dual_basis`) is also exercised directly on synthetic
fixtures.  From the basis come the spectral projections P0 (full), the
limited P~0 / Q~0 pair used by the low-energy inverse, and P_pp (all point
spectrum, via Schur-based Riesz projectors).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import linalg as sla

from . import birman, evolution, grids, resolvent
from .grids import DenseOperator, GridFunction, Kind, Mode, bilinear_pair
from .resolvent import Branch, ResolventSpec


class NotNilpotentError(ValueError):
    """Input matrix is not nilpotent at the working tolerance."""


class NotSymmetricError(ValueError):
    """Input matrix is not symmetric with respect to the bilinear form."""


class DegeneratePairingError(ArithmeticError):
    """No dual partner with nonzero pairing exists (degenerate form)."""


class NoStabilizationError(ArithmeticError):
    """Filtration dimensions keep growing past the iteration cap."""


class ZeroVectorError(ValueError):
    """Cannot classify the zero vector."""


class ClusterAmbiguousError(ArithmeticError):
    """Two eigenvalue clusters are too close to separate reliably."""


EIGENVALUE = "EIGENVALUE"
RESONANCE = "RESONANCE"


# ---------------------------------------------------------------------------
# Jordan basis container


@dataclass
class JordanBasis:
    """Self-dual Jordan chain basis.

    vectors maps (j, k, ell) -> coefficient vector (ndarray) or GridFunction;
    pairing_certificate is the Gram matrix of bilinear pairs in the canonical
    label order, to be compared against `expected_gram(labels)`.
    """

    K: int
    multiplicities: dict
    vectors: dict
    labels: list
    pairing_certificate: np.ndarray
    form: np.ndarray | None = None  # B matrix for coefficient-space bases

    @property
    def dim(self):
        return sum(k * lk for k, lk in self.multiplicities.items())

    def pair(self, u, v):
        if isinstance(u, GridFunction):
            return bilinear_pair(u, v)
        B = self.form if self.form is not None else np.eye(len(u))
        return complex(u @ B @ v)


def canonical_labels(multiplicities):
    """Label order (k, ell, j) with k descending, matching certificate rows."""
    labels = []
    for k in sorted(multiplicities, reverse=True):
        for ell in range(1, multiplicities[k] + 1):
            for j in range(1, k + 1):
                labels.append((j, k, ell))
    return labels


def expected_gram(labels):
    """The target antidiagonal 0/1 Gram pattern for a given label order."""
    n = len(labels)
    G = np.zeros((n, n))
    for a, (j1, k1, l1) in enumerate(labels):
        for b, (j2, k2, l2) in enumerate(labels):
            if (k1, l1) == (k2, l2) and j2 == k1 + 1 - j1:
                G[a, b] = 1.0
    return G


def _gram(vectors, labels, pair):
    n = len(labels)
    G = np.zeros((n, n), complex)
    for a, la in enumerate(labels):
        for b, lb in enumerate(labels):
            G[a, b] = pair(vectors[la], vectors[lb])
    return G


# ---------------------------------------------------------------------------
# Abstract construction: B-symmetric nilpotent -> self-dual chains


def _null_basis(M, tol_rank, scale=None):
    """Orthonormal basis of the (right) null space by SVD.

    The rank cutoff is tol_rank times `scale` (default: the largest
    singular value).  Powers of nilpotent matrices need an external scale:
    a numerically-zero power has only noise singular values.
    """
    if M.shape[0] == 0:
        return np.zeros((0, 0))
    U, s, Vh = np.linalg.svd(M)
    if scale is None:
        scale = s[0] if len(s) and s[0] > 0 else 1.0
    rank = int(np.sum(s > tol_rank * scale))
    return Vh[rank:].conj().T


def _complement_in(big, small, tol_rank=1e-10):
    """Orthonormal vectors extending span(small) to span(big)."""
    if small.shape[1] == 0:
        return big
    proj = big - small @ (small.conj().T @ big)
    U, s, _ = np.linalg.svd(proj, full_matrices=False)
    cutoff = tol_rank * max(1.0, s[0] if len(s) else 1.0)
    return U[:, s > cutoff]


def jordan_dual_basis(N, B=None, tol=1e-10):
    """Self-dual Jordan basis of a B-symmetric nilpotent matrix.

    N may be an ndarray or a MATRIX DenseOperator acting on a space where B
    (default: plain dot product) is a nondegenerate symmetric bilinear form
    with B(Nu, v) = B(u, Nv).  The construction is top-down in chain length:
    candidate chain tops are orthogonalized against finished chains through
    their dual partners, normalized by the scalar (at most quadratic)
    equation B(N^{k-1}(z psi + phi), z psi + phi) = 1 with the smaller root
    preferred, then corrected by psi <- psi - (m_a / 2) N^{k-1-a} psi to kill
    the remaining same-chain pairings.
    """
    if isinstance(N, DenseOperator):
        N = N.effective
    N = np.asarray(N, dtype=complex)
    n = N.shape[0]
    if B is None:
        B = np.eye(n)
    B = np.asarray(B, dtype=complex)
    scale = max(np.abs(N).max(), 1.0) * max(np.abs(B).max(), 1.0)

    if np.abs(B @ N - N.T @ B).max() > 100 * tol * scale:
        raise NotSymmetricError("matrix is not symmetric under the bilinear form")

    # Filtration ker N^k and chain length K.
    normN = max(np.linalg.norm(N, 2), 1.0)
    powers = [np.eye(n, dtype=complex)]
    kernels = [np.zeros((n, 0))]
    K = None
    for k in range(1, n + 1):
        powers.append(powers[-1] @ N)
        kernels.append(_null_basis(powers[-1], tol, scale=normN**k))
        if kernels[-1].shape[1] == n:
            K = k
            break
    if K is None:
        raise NotNilpotentError("N^n != 0 at the working tolerance")

    def pair(u, v):
        return complex(u @ B @ v)

    chains = []  # each: dict with "k" and "vecs" mapping j -> vector

    def project_out(v):
        """Remove all pairings of v with finished chains via dual partners."""
        for c in chains:
            kc = c["k"]
            for j in range(1, kc + 1):
                coef = pair(v, c["vecs"][j])
                if coef != 0:
                    v = v - coef * c["vecs"][kc + 1 - j]
        return v

    for k in range(K, 0, -1):
        # Accounted part of ker N^k: ker N^{k-1} plus level-k members of
        # longer chains.
        accounted = [kernels[k - 1]]
        for c in chains:
            if c["k"] > k:
                accounted.append(c["vecs"][k][:, None])
        accounted = np.hstack(accounted) if accounted else np.zeros((n, 0))
        if accounted.shape[1]:
            Q, _ = np.linalg.qr(accounted)
        else:
            Q = accounted
        cands = _complement_in(kernels[k], Q, tol)
        queue = [project_out(cands[:, i]) for i in range(cands.shape[1])]

        while queue:
            psi = queue.pop(0)
            Ntop = powers[k - 1] @ psi
            m = pair(Ntop, psi)
            norm2 = max(float(np.abs(psi) @ np.abs(psi)), 1e-300)
            if abs(m) <= tol * scale * norm2:
                # Isotropic top: combine with a dual partner from the queue.
                best, bval = None, 0.0
                for idx, phi in enumerate(queue):
                    b = pair(Ntop, phi)
                    if abs(b) > abs(bval):
                        best, bval = idx, b
                if best is None or abs(bval) <= tol * scale * norm2:
                    raise DegeneratePairingError(
                        f"no dual partner for a length-{k} chain top"
                    )
                phi = queue.pop(best)
                mphi = pair(powers[k - 1] @ phi, phi)
                # B(N^{k-1}(z psi + phi), z psi + phi) = z^2 m + 2 z b + mphi = 1
                if abs(m) <= tol * scale * norm2:
                    roots = [(1.0 - mphi) / (2.0 * bval)]
                else:
                    roots = list(np.roots([m, 2.0 * bval, mphi - 1.0]))
                roots.sort(key=lambda z: (abs(z), -np.real(z)))
                z0 = roots[0]
                queue.append(psi)  # psi stays an independent candidate
                psi = z0 * psi + phi
            else:
                psi = psi / np.lib.scimath.sqrt(m)
            # Kill same-chain pairings below the antidiagonal.
            for a in range(k - 2, -1, -1):
                ma = pair(powers[a] @ psi, psi)
                psi = psi - 0.5 * ma * (powers[k - 1 - a] @ psi)
            vecs = {j: powers[k - j] @ psi for j in range(1, k + 1)}
            chains.append({"k": k, "vecs": vecs})
            queue = [project_out(v) for v in queue]

    multiplicities = {}
    for c in chains:
        multiplicities[c["k"]] = multiplicities.get(c["k"], 0) + 1
    vectors = {}
    counters = {k: 0 for k in multiplicities}
    for c in sorted(chains, key=lambda c: -c["k"]):
        counters[c["k"]] += 1
        ell = counters[c["k"]]
        for j in range(1, c["k"] + 1):
            vectors[(j, c["k"], ell)] = c["vecs"][j]
    labels = canonical_labels(multiplicities)
    cert = _gram(vectors, labels, pair)
    return JordanBasis(K, multiplicities, vectors, labels, cert, form=B)


def nilpotent_fixture(chain_spec, dim=None, rng=None):
    """Random B-symmetric (B = dot) nilpotent with prescribed chain structure.

    chain_spec maps chain length k to multiplicity L_k.  Each chain block is
    realized on its own coordinates through a dot-isotropic dual pair basis,
    then the whole matrix is conjugated by a random complex orthogonal
    similarity (which preserves plain symmetry).
    """
    rng = np.random.default_rng(rng)
    blocks = []
    for k in sorted(chain_spec, reverse=True):
        for _ in range(chain_spec[k]):
            blocks.append(_symmetric_jordan_block(k))
    base = sla.block_diag(*blocks) if blocks else np.zeros((0, 0))
    n = base.shape[0]
    if dim is not None:
        if dim < n:
            raise ValueError(f"chain spec needs dimension {n} > {dim}")
        pad = np.zeros((dim, dim), complex)
        pad[:n, :n] = base
        base = pad
        n = dim
    A = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    A = 0.35 * (A - A.T) / np.sqrt(max(n, 1))
    Q = sla.expm(A)  # complex orthogonal: Q^T Q = I
    return Q @ base @ Q.T


def _symmetric_jordan_block(k):
    """Plain-symmetric nilpotent k x k matrix with a single length-k chain.

    Built from a dot-self-dual chain basis: coordinates are allocated to
    dual pairs (e_j, e_{k+1-j}) through isotropic vectors (1, +/- i)/sqrt 2,
    with a real middle vector when k is odd; then N = sum over j of
    psi_{j-1} psi_{k+1-j}^T, which is symmetric and shifts the chain.
    """
    psi = np.zeros((k, k), complex)  # column j-1 holds psi_j
    for j in range(1, k // 2 + 1):
        a, b = 2 * (j - 1), 2 * (j - 1) + 1
        psi[a, j - 1] = 1 / np.sqrt(2)
        psi[b, j - 1] = 1j / np.sqrt(2)
        psi[a, k - j] = 1 / np.sqrt(2)
        psi[b, k - j] = -1j / np.sqrt(2)
    if k % 2 == 1:
        mid = (k + 1) // 2
        psi[k - 1, mid - 1] = 1.0
    N = np.zeros((k, k), complex)
    for j in range(2, k + 1):
        N += np.outer(psi[:, j - 2], psi[:, k - j])
    return N


# ---------------------------------------------------------------------------
# Concrete threshold machinery


def nullspace_X1(V, grid, tol_rank=1e-8):
    """Null vectors g of I + V R0(0) together with the states Psi = R0(0) g."""
    A = birman.build_bs(V, grid, 0.0)
    G = _null_basis(A.effective, tol_rank)
    R0 = resolvent.build_R0(grid, ResolventSpec(0.0, Branch.PLUS))
    out = []
    for i in range(G.shape[1]):
        g = GridFunction(grid, G[:, i])
        psi = grids.apply(R0, g)
        out.append((g, psi))
    return out


def classify_state(psi, grid=None, tol_res=1e-2):
    """EIGENVALUE / RESONANCE verdict by fitting the 1/r tail.

    Fits the 3-D profile psi(r) = c0/r + c1/r^2 over the outer third of the
    radii; a resonance is a surviving c0 tail relative to the profile's sup.
    Returns a dict with verdict, c0, c1 and the discrete L1/L2 profile norms.
    """
    grid = psi.grid if grid is None else grid
    sup = float(np.abs(psi.values).max())
    if sup == 0.0:
        raise ZeroVectorError("cannot classify the zero vector")
    r = grid.radii
    prof = grids.profile_values(psi)
    order = np.argsort(r)
    outer = order[2 * len(r) // 3 :]
    if len(outer) < 8:
        raise ValueError("tail-fit window shorter than 8 nodes")
    ro, po = r[outer], prof[outer]
    design = np.column_stack([1.0 / ro, 1.0 / ro**2])
    coef, *_ = np.linalg.lstsq(design, po, rcond=None)
    c0, c1 = complex(coef[0]), complex(coef[1])
    prof_sup = float(np.abs(prof).max())
    verdict = RESONANCE if abs(c0) > tol_res * prof_sup else EIGENVALUE
    return {
        "verdict": verdict,
        "c0": c0,
        "c1": c1,
        "l1_norm": grids.profile_lp_norm(psi, 1),
        "l2_norm": grids.profile_lp_norm(psi, 2),
        "tol_res": tol_res,
    }


def build_filtration(V, grid, tol_rank=1e-8, max_k=8):
    """Nested bases of X_1 subset ... subset X_K, stabilized.

    Returns a list of orthonormal column matrices; X_{k+1} collects the
    solutions of (I + R0(0)V) Psi = R0(0) Phi over the solvable part of X_k
    together with the homogeneous solutions X_1.
    """
    Vop = birman.potential_operator(V)
    R0 = resolvent.build_R0(grid, ResolventSpec(0.0, Branch.PLUS)).effective
    M = np.eye(grid.size) + R0 @ Vop.effective
    U, s, Vh = np.linalg.svd(M)
    cutoff = tol_rank * s[0]
    rank = int(np.sum(s > cutoff))
    X1 = Vh[rank:].conj().T
    if X1.shape[1] == 0:
        return []
    left_null = U[:, rank:]
    # Minimal-norm solver restricted to the numerically regular part.
    Ur, sr, Vr = U[:, :rank], s[:rank], Vh[:rank]

    def solve(rhs):
        return Vr.conj().T @ ((Ur.conj().T @ rhs) / sr[:, None])

    spaces = [X1]
    for _ in range(max_k):
        Xk = spaces[-1]
        rhs = R0 @ Xk
        # Solvable combinations: R0 Phi must avoid the left null space.
        C = left_null.conj().T @ rhs
        if C.shape[0]:
            alpha = _null_basis(C, tol_rank, scale=max(np.linalg.norm(rhs, 2), 1e-300))
        else:
            alpha = np.eye(Xk.shape[1])
        if alpha.shape[1] == 0:
            particular = np.zeros((grid.size, 0))
        else:
            particular = solve(rhs @ alpha)
        stacked = np.hstack([Xk, X1, particular])
        Q, sv, _ = np.linalg.svd(stacked, full_matrices=False)
        nxt = Q[:, sv > tol_rank * sv[0]]
        if nxt.shape[1] == Xk.shape[1]:
            return spaces
        spaces.append(nxt)
    raise NoStabilizationError(
        f"filtration still growing after {max_k} steps: dims "
        f"{[sp.shape[1] for sp in spaces]}"
    )


def build_threshold_basis(V, grid, tol_rank=1e-8, tol=1e-10):
    """Self-dual chain basis for the concrete operator H = -Delta + V on the grid.

    Restricts the discretized H to span(X) in an orthonormal coordinate
    frame, runs the abstract construction there, and lifts the coefficient
    vectors back to GridFunctions.
    """
    spaces = build_filtration(V, grid, tol_rank=tol_rank)
    if not spaces:
        labels = []
        return JordanBasis(0, {}, {}, labels, np.zeros((0, 0)))
    Q = spaces[-1]
    H = evolution.discretize_H(V, grid).effective
    N = Q.conj().T @ (H @ Q)
    Bres = Q.T @ (grid.weights[:, None] * Q)
    coeff_basis = jordan_dual_basis(N, Bres, tol=tol)
    vectors = {
        lab: GridFunction(grid, Q @ vec)
        for lab, vec in coeff_basis.vectors.items()
    }
    labels = coeff_basis.labels
    cert = _gram(vectors, labels, bilinear_pair)
    return JordanBasis(
        coeff_basis.K, coeff_basis.multiplicities, vectors, labels, cert
    )


def threshold_report(V, grid, tol_rank=1e-8, tol_res=1e-2):
    """ThresholdReport dict: filtration dims, per-state verdicts, tail fits."""
    spaces = build_filtration(V, grid, tol_rank=tol_rank)
    pairs = nullspace_X1(V, grid, tol_rank=tol_rank)
    verdicts, c0s = [], []
    for _, psi in pairs:
        res = classify_state(psi, grid, tol_res=tol_res)
        verdicts.append(res["verdict"])
        c0s.append(res["c0"])
    mode = grid.mode.value
    M = grid.size if grid.mode is Mode.RADIAL_SWAVE else round(grid.size ** (1 / 3))
    return {
        "dims": [sp.shape[1] for sp in spaces],
        "verdicts": verdicts,
        "c0": [[c.real, c.imag] for c in c0s],
        "tol_rank": tol_rank,
        "tol_res": tol_res,
        "grid": {"mode": mode, "L": grid.extent, "M": int(M)},
    }


# ---------------------------------------------------------------------------
# Projections


def _rank_one_sum(grid, pairs):
    """Sum of f -> pair(f, dual) * vec operators as a MATRIX DenseOperator."""
    P = np.zeros((grid.size, grid.size), complex)
    w = grid.weights
    for vec, dual in pairs:
        P += np.outer(vec.values, w * dual.values)
    return DenseOperator(grid, P, Kind.MATRIX)


def build_P0(basis, grid=None):
    """Full zero-energy projection P0 f = sum pair(f, psi_{k+1-j,k}) psi_{j,k}."""
    grid = _basis_grid(basis, grid)
    pairs = []
    for (j, k, ell) in basis.labels:
        pairs.append((basis.vectors[(j, k, ell)], basis.vectors[(k + 1 - j, k, ell)]))
    return _rank_one_sum(grid, pairs)


def build_Ptilde0(basis, grid=None):
    """Limited projection P~0 f = sum pair(f, psi_{1,k}) psi_{k,k}."""
    grid = _basis_grid(basis, grid)
    pairs = []
    for k, Lk in basis.multiplicities.items():
        for ell in range(1, Lk + 1):
            pairs.append((basis.vectors[(k, k, ell)], basis.vectors[(1, k, ell)]))
    return _rank_one_sum(grid, pairs)


def build_Qtilde0(basis, grid=None):
    """Complementary projection Q~0 = I - P~0."""
    grid = _basis_grid(basis, grid)
    P = build_Ptilde0(basis, grid)
    return DenseOperator(grid, np.eye(grid.size) - P.effective, Kind.MATRIX)


def _basis_grid(basis, grid):
    if grid is not None:
        return grid
    for vec in basis.vectors.values():
        return vec.grid
    raise ValueError("empty basis needs an explicit grid")


def free_edge_scale(grid):
    """Lowest eigenvalue of the free discretized Laplacian (continuum edge)."""
    if grid.mode is Mode.RADIAL_SWAVE:
        return (np.pi / (2.0 * grid.extent)) ** 2
    return 3.0 * (np.pi / (2.0 * grid.extent)) ** 2


def build_Ppp(
    V,
    grid,
    basis=None,
    delta_edge=None,
    delta_im=1e-3,
    cluster_tol=1e-6,
):
    """Projection onto all point spectrum away from the continuum edge.

    Discrete eigenvalues with Re < -delta_edge or |Im| > delta_im are point
    spectrum; they are clustered and each cluster's Riesz projector is
    extracted from a sorted Schur form via a Sylvester solve.  A threshold
    basis (zero-energy part) may be supplied and its P0 is added.
    """
    H = evolution.discretize_H(V, grid).effective
    if delta_edge is None:
        delta_edge = 3.0 * free_edge_scale(grid)
    evals = np.linalg.eigvals(H)
    selected = [
        ev for ev in evals if ev.real < -delta_edge or abs(ev.imag) > delta_im
    ]
    clusters = _cluster(selected, cluster_tol)
    P = np.zeros((grid.size, grid.size), complex)
    for center, members in clusters:
        radius = max(abs(ev - center) for ev in members) + cluster_tol
        P += _riesz_projector(H, center, radius)
    if basis is not None and basis.dim > 0:
        P += build_P0(basis, grid).effective
    return DenseOperator(grid, P, Kind.MATRIX)


def _cluster(evals, cluster_tol):
    """Greedy clustering of selected eigenvalues; ambiguity guarded."""
    clusters = []
    for ev in sorted(evals, key=lambda z: (z.real, z.imag)):
        for c in clusters:
            if abs(ev - c[0]) <= 10 * cluster_tol:
                c[1].append(ev)
                c[0] = np.mean(c[1])
                break
        else:
            clusters.append([ev, [ev]])
    centers = [c[0] for c in clusters]
    for i in range(len(centers)):
        for j in range(i + 1, len(centers)):
            gap = abs(centers[i] - centers[j])
            if gap < 10 * cluster_tol:
                raise ClusterAmbiguousError(
                    f"clusters at {centers[i]:.6g} and {centers[j]:.6g} "
                    f"separated by {gap:.3e}"
                )
    return [(c[0], c[1]) for c in clusters]


def _riesz_projector(H, center, radius):
    """Spectral projector for eigenvalues within `radius` of `center`.

    Sorted complex Schur form [[T11, T12], [0, T22]] with the cluster in
    T11; the projector is Z [[I, X], [0, 0]] Z* with T11 X - X T22 = T12.
    """
    T, Z, sdim = sla.schur(
        H, output="complex", sort=lambda z: abs(z - center) <= radius
    )
    if sdim == 0:
        return np.zeros_like(H)
    if sdim == H.shape[0]:
        return np.eye(H.shape[0], dtype=complex)
    T11, T12, T22 = T[:sdim, :sdim], T[:sdim, sdim:], T[sdim:, sdim:]
    X = sla.solve_sylvester(T11, -T22, T12)
    PT = np.zeros_like(H)
    PT[:sdim, :sdim] = np.eye(sdim)
    PT[:sdim, sdim:] = X
    return Z @ PT @ Z.conj().T


# ---------------------------------------------------------------------------
# Fixtures on the grid


def build_chain_fixture(grid, target, seed=0, scale=1.0):
    """Finite-rank symmetric perturbation giving H0 + F a prescribed
    zero-energy Jordan structure.

    The lowest few eigenpairs (mu_i, u_i) of the free discretized H0 are
    replaced: F = U (N_target - D) U^T with U real orthonormal eigenvectors
    and N_target a symmetric nilpotent with the target chain pattern, so
    H0 + F acts as N_target on span(U) and is untouched on its complement.
    Returns the perturbation F as a MATRIX DenseOperator (usable wherever a
    potential is expected).
    """
    n = sum(k * lk for k, lk in target.items())
    if n == 0:
        raise ValueError("empty chain target")
    if n > grid.size:
        raise ValueError(f"target dimension {n} exceeds grid size {grid.size}")
    H0 = evolution.discretize_H(None, grid).effective.real
    mu, W = np.linalg.eigh(H0)
    U = W[:, :n]
    D = np.diag(mu[:n])
    N_target = scale * nilpotent_fixture(target, rng=seed)
    F = U @ (N_target - D) @ U.T
    return DenseOperator(grid, F, Kind.MATRIX)
