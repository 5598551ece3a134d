"""Bipartite and tripartite entanglement measures.

Bipartite measures, all normalized so a Bell pair scores 1:

* ``wootters_tangle`` -- squared concurrence of a two-qubit density matrix
  (spin-flip construction).
* ``pure_itangle`` -- 2*nu*[1 - tr(rho_A^2)] across any cut of a pure state;
  reduces to the Wootters tangle on two qubits and makes sense for factors
  of any dimension.
* ``convex_roof_itangle`` -- mixed-state extension as the minimum average
  pure-state tangle over ensemble decompositions (numerical minimization
  over the decomposition freedom).
* ``rank2_itangle`` -- closed form for rank <= 2 mixed states of a
  qubit x D-level pair, derived here by minimizing over two-outcome
  measurements on a qubit purifier (a hyperbolic-rotation eigenvalue
  problem); cross-validated against the convex roof.

The tripartite ``i_residual_tangle`` averages one-versus-rest tangles over
the three cuts, subtracts the pairwise mixed tangles, and rescales each
term by d/2 where d is the smaller effective dimension of the term's two
sides.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .tensor import (
    Cut,
    DEFAULT_RANK_TOL,
    DensityMatrix,
    PureState,
    effective_rank,
    partial_trace,
    purity,
)

ROOF_WEIGHT_FLOOR = 1e-14

# sigma_y (x) sigma_y is real: reversal of both indices with signs -,+,+,-.
_FLIP_SIGNS = np.array([-1.0, 1.0, 1.0, -1.0])
_FLIP_SIGN_MATRIX = np.outer(_FLIP_SIGNS, _FLIP_SIGNS)


def universal_inversion(rho: DensityMatrix, nu_a: float = 1.0, nu_b: float = 1.0) -> np.ndarray:
    """nu_a*nu_b * (I(x)I - rho_A(x)I - I(x)rho_B + rho) for a two-factor state.

    Generalizes the two-qubit spin flip to arbitrary dimensions; the
    overlap tr(rho * inversion) equals
    nu_a*nu_b*[1 - tr(rho_A^2) - tr(rho_B^2) + tr(rho^2)].
    """
    if len(rho.dims) != 2:
        raise ValueError("universal inversion needs exactly two factors")
    da, db = rho.dims
    rho_a = partial_trace(rho, (0,)).matrix
    rho_b = partial_trace(rho, (1,)).matrix
    eye = np.eye(da * db)
    return nu_a * nu_b * (
        eye - np.kron(rho_a, np.eye(db)) - np.kron(np.eye(da), rho_b) + rho.matrix
    )


def inversion_overlap(rho: DensityMatrix, nu_a: float = 1.0, nu_b: float = 1.0) -> float:
    """tr(rho * universal_inversion(rho)) from purities alone."""
    if len(rho.dims) != 2:
        raise ValueError("inversion overlap needs exactly two factors")
    pa = purity(partial_trace(rho, (0,)))
    pb = purity(partial_trace(rho, (1,)))
    return nu_a * nu_b * (1.0 - pa - pb + purity(rho))


def _spin_flip(rhos: np.ndarray) -> np.ndarray:
    """sigma_y(x)sigma_y rho* sigma_y(x)sigma_y for a (..., 4, 4) stack."""
    return _FLIP_SIGN_MATRIX * rhos.conj()[..., ::-1, ::-1]


def _sqrtm_psd(rhos: np.ndarray) -> np.ndarray:
    """Hermitian PSD square root of a (..., d, d) stack."""
    evals, evecs = np.linalg.eigh(rhos)
    root = np.sqrt(np.clip(evals, 0.0, None))
    return np.einsum("...ik,...k,...jk->...ij", evecs, root, evecs.conj())


def _wootters_batch(rhos: np.ndarray) -> np.ndarray:
    """Squared concurrence of a (..., 4, 4) stack of two-qubit states."""
    sq = _sqrtm_psd(rhos)
    m = sq @ _spin_flip(rhos) @ sq
    m = 0.5 * (m + m.conj().swapaxes(-1, -2))
    lam = np.sqrt(np.clip(np.linalg.eigvalsh(m), 0.0, None))
    # eigvalsh sorts ascending: largest root minus the other three
    c = 2.0 * lam[..., -1] - lam.sum(axis=-1)
    return np.maximum(c, 0.0) ** 2


def wootters_tangle(rho: DensityMatrix) -> float:
    """Two-qubit tangle max{0, l1-l2-l3-l4}^2.

    The l_i are the decreasing square roots of the eigenvalues of
    rho * spin_flip(rho), computed through the stable Hermitian product
    sqrt(rho) * spin_flip(rho) * sqrt(rho).
    """
    if rho.matrix.shape != (4, 4):
        raise ValueError("Wootters tangle is defined for two qubits (4x4)")
    return float(_wootters_batch(rho.matrix[None])[0])


def _pure_pair_tangle(mat: np.ndarray) -> float:
    """2[1 - tr(rho_A^2)] for a normalized pure state reshaped to (dA, dB)."""
    if mat.shape[0] <= mat.shape[1]:
        gram = mat @ mat.conj().T
    else:
        gram = mat.conj().T @ mat
    return float(2.0 * (1.0 - np.einsum("ij,ji->", gram, gram).real))


def pure_itangle(state: PureState, cut: Cut, nu_product: float = 1.0) -> float:
    """Tangle of a pure state across ``cut``: 2*nu_product*[1 - tr(rho_A^2)].

    Symmetric in the two sides because both marginals of a pure state
    share their nonzero spectrum.
    """
    cut.validate_for(state.shape)
    rho_a = partial_trace(state, cut.side_a)
    return 2.0 * nu_product * (1.0 - purity(rho_a))


# ---------------------------------------------------------------------------
# rank-2 mixed states with a qubit purifier: closed form
# ---------------------------------------------------------------------------

def _rank2_tangle_core(w: np.ndarray, rank_tol: float = DEFAULT_RANK_TOL) -> np.ndarray:
    """Tangle of pair states purified by a qubit, batched.

    ``w`` has shape (..., 2, dx, dy): component j of the purifier qubit
    times the pair state as a (dx, dy) amplitude matrix, normalized so
    sum_j ||w_j||^2 = 1 per entry.

    Every length-2 ensemble decomposition of the pair state comes from a
    projective measurement along a Bloch direction of the purifier, and
    longer decompositions never do better, so the roof is a minimum over
    the Bloch sphere.  Writing the average pure tangle of the antipodal
    pair as a ratio of quadratic forms in the null 4-vector (1, n), the
    minimization becomes an eigenvalue problem after a hyperbolic rotation
    that maps the purifier's Bloch vector to rest:

        tau = 2 - 2*Q00 - 2*max eig (L^T Q L)[1:, 1:]

    with Q_{mu nu} = Re tr(S_mu S_nu) built from the purifier-component
    correlations S_mu, and L the boost of velocity |r| along the Bloch
    vector r.  States with a pure pair (|r| -> 1) take the direct branch
    tau = 2*(1 - Q00).
    """
    r = np.einsum("...jab,...kcb->...jkac", w, w.conj())
    s0 = r[..., 0, 0, :, :] + r[..., 1, 1, :, :]
    s1 = r[..., 0, 1, :, :] + r[..., 1, 0, :, :]
    s2 = 1j * (r[..., 0, 1, :, :] - r[..., 1, 0, :, :])
    s3 = r[..., 0, 0, :, :] - r[..., 1, 1, :, :]
    s = np.stack([s0, s1, s2, s3], axis=-3)
    q = np.einsum("...mab,...nba->...mn", s, s).real

    tr_r = np.einsum("...jkaa->...jk", r)
    bloch = np.stack(
        [
            2.0 * tr_r[..., 0, 1].real,
            -2.0 * tr_r[..., 0, 1].imag,
            (tr_r[..., 0, 0] - tr_r[..., 1, 1]).real,
        ],
        axis=-1,
    )
    delta = np.linalg.norm(bloch, axis=-1)
    q00 = q[..., 0, 0]
    pure_mask = delta >= 1.0 - 2.0 * rank_tol

    # Boost only the genuinely mixed entries; park the rest at delta = 0.
    delta_m = np.where(pure_mask, 0.0, delta)
    safe = np.maximum(delta_m, 1e-300)
    nhat = np.where(delta_m[..., None] > 0, bloch / safe[..., None], 0.0)
    gamma = 1.0 / np.sqrt(1.0 - delta_m**2)

    shape = q.shape
    boost = np.zeros(shape)
    boost[..., 0, 0] = gamma
    boost[..., 0, 1:] = -(gamma * delta_m)[..., None] * nhat
    boost[..., 1:, 0] = boost[..., 0, 1:]
    boost[..., 1:, 1:] = np.eye(3) + (gamma - 1.0)[..., None, None] * (
        nhat[..., :, None] * nhat[..., None, :]
    )

    boosted = np.einsum("...ma,...mn,...nb->...ab", boost, q, boost)
    spatial = boosted[..., 1:, 1:]
    spatial = 0.5 * (spatial + spatial.swapaxes(-1, -2))
    lam_max = np.linalg.eigvalsh(spatial)[..., -1]

    mixed_tau = 2.0 - 2.0 * q00 - 2.0 * lam_max
    pure_tau = 2.0 * (1.0 - q00)
    return np.where(pure_mask, pure_tau, mixed_tau)


def rank2_itangle(rho: DensityMatrix, rank_tol: float = DEFAULT_RANK_TOL) -> float:
    """Closed-form tangle of a two-factor density matrix of rank <= 2.

    The state is purified with a qubit ancilla from its eigendecomposition
    and handed to the two-outcome-measurement minimization of
    ``_rank2_tangle_core``.  Must agree with ``convex_roof_itangle`` to
    optimizer accuracy; tests enforce 1e-6.
    """
    if len(rho.dims) != 2:
        raise ValueError("rank-2 tangle needs exactly two factors")
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    evals, evecs = np.linalg.eigh(rho.matrix)
    evals, evecs = evals[::-1], evecs[:, ::-1]
    if rho.matrix.shape[0] > 2 and evals[2] > rank_tol:
        raise ValueError(
            f"state has effective rank > 2 at tolerance {rank_tol:g}; "
            "use convex_roof_itangle"
        )
    da, db = rho.dims
    if evals.size < 2 or evals[1] <= rank_tol:
        return _pure_pair_tangle(evecs[:, 0].reshape(da, db))
    w = np.stack(
        [
            math.sqrt(evals[0]) * evecs[:, 0].reshape(da, db),
            math.sqrt(max(evals[1], 0.0)) * evecs[:, 1].reshape(da, db),
        ]
    )
    # renormalize away the weight lost to discarded (dust) eigenvalues
    w = w / math.sqrt(evals[0] + evals[1])
    return float(_rank2_tangle_core(w[None], rank_tol)[0])


# ---------------------------------------------------------------------------
# convex-roof minimization
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RoofOptions:
    """Search budget for the convex-roof minimization.

    ``ensemble_sizes`` defaults to every length from rank to rank**2;
    restarts cycle through the sizes, restart 0 starting at the plain
    eigendecomposition.  Results are deterministic per seed, and the best
    value after k restarts is a prefix of the best values after k' > k.
    """

    restarts: int = 20
    ensemble_sizes: Optional[tuple[int, ...]] = None
    tol: float = 1e-8
    seed: int = 0

    def __post_init__(self):
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.ensemble_sizes is not None:
            sizes = tuple(int(m) for m in self.ensemble_sizes)
            if not sizes or any(m < 1 for m in sizes):
                raise ValueError("ensemble sizes must be positive")
            object.__setattr__(self, "ensemble_sizes", sizes)


@dataclass(frozen=True)
class RoofResult:
    """Best decomposition found: value = sum_i probabilities[i] * tangle(members[i])."""

    value: float
    probabilities: np.ndarray
    members: np.ndarray
    ensemble_size: int
    restart_values: tuple[float, ...]


def _polar_factors(z: np.ndarray):
    """(C, S, lam, V) with C = Z (Z^dag Z)^(-1/2) and S = (Z^dag Z)^(-1/2)."""
    h = z.conj().T @ z
    lam, v = np.linalg.eigh(h)
    lam = np.clip(lam, 1e-30, None)
    s = (v * lam**-0.5) @ v.conj().T
    return z @ s, s, lam, v


def _roof_objective(x: np.ndarray, wm: np.ndarray, m: int, da: int, db: int):
    """Average ensemble tangle and its gradient in (Re Z, Im Z).

    Ensembles are parameterized as Phi = polar(Z) @ wm where the rows of
    ``wm`` are the square-root-scaled eigenvectors of the target state;
    the polar retraction keeps the column isometry constraint exact.
    """
    r = wm.shape[0]
    z = (x[: m * r] + 1j * x[m * r:]).reshape(m, r)
    c, s, lam, v = _polar_factors(z)
    phi = c @ wm
    a = phi.reshape(m, da, db)
    p = np.einsum("mi,mi->m", phi, phi.conj()).real
    aah = np.einsum("mab,mcb->mac", a, a.conj())
    n2 = np.einsum("mac,mac->m", aah, aah.conj()).real
    live = p > ROOF_WEIGHT_FLOOR
    ps = np.where(live, p, 1.0)
    value = float(np.sum(np.where(live, 2.0 * (p - n2 / ps), 0.0)))

    aaha = np.einsum("mac,mcb->mab", aah, a).reshape(m, -1)
    gphi = 2.0 * (phi - 2.0 * aaha / ps[:, None] + (n2 / ps**2)[:, None] * phi)
    gphi[~live] = 0.0
    g = gphi @ wm.conj().T
    k = g.conj().T @ z
    mtil = v.conj().T @ (s @ k @ s) @ v
    denom = np.sqrt(lam)[:, None] + np.sqrt(lam)[None, :]
    w = v @ (mtil / denom) @ v.conj().T
    gamma = g @ s - z @ (w + w.conj().T)
    return value, np.concatenate([2.0 * gamma.real.ravel(), 2.0 * gamma.imag.ravel()])


def convex_roof_decomposition(rho: DensityMatrix, options: RoofOptions = RoofOptions()) -> RoofResult:
    """Minimize the average pure-state tangle over ensemble decompositions.

    Decompositions of length m are written phi_i = sum_j C_ij w_j with
    C an m x rank isometry (C^dag C = 1) and w_j the square-root-scaled
    eigenvectors of ``rho``; every valid decomposition arises this way.
    C is parameterized by the polar form of an unconstrained complex
    matrix and minimized with L-BFGS using the analytic gradient.
    """
    if len(rho.dims) != 2:
        raise ValueError("convex roof needs exactly two factors")
    da, db = rho.dims
    evals, evecs = np.linalg.eigh(rho.matrix)
    keep = evals > DEFAULT_RANK_TOL
    rank = int(np.count_nonzero(keep))
    if rank == 0:
        raise ValueError("density matrix has no weight above the rank tolerance")
    lam = evals[keep][::-1]
    vecs = evecs[:, keep][:, ::-1]
    wm = (np.sqrt(lam)[:, None] * vecs.T).astype(complex)

    sizes = options.ensemble_sizes or tuple(range(rank, rank * rank + 1))
    if min(sizes) < rank:
        raise ValueError(f"ensemble sizes {sizes} fall below the state rank {rank}")

    lbfgs_opts = {"maxiter": 1000, "ftol": options.tol * 1e-4, "gtol": options.tol * 0.1}
    children = np.random.SeedSequence(options.seed).spawn(options.restarts)
    best = (np.inf, None, None)
    restart_values = []
    for i in range(options.restarts):
        m = sizes[i % len(sizes)]
        if i == 0:
            z0 = np.eye(m, rank, dtype=complex)
            f0, _ = _roof_objective(
                np.concatenate([z0.real.ravel(), z0.imag.ravel()]), wm, m, da, db
            )
            if f0 < best[0]:
                best = (f0, z0, m)
        else:
            rng = np.random.default_rng(children[i])
            z0 = rng.standard_normal((m, rank)) + 1j * rng.standard_normal((m, rank))
        x0 = np.concatenate([z0.real.ravel(), z0.imag.ravel()])
        res = minimize(
            _roof_objective,
            x0,
            args=(wm, m, da, db),
            jac=True,
            method="L-BFGS-B",
            options=lbfgs_opts,
        )
        if res.fun < best[0]:
            z = (res.x[: m * rank] + 1j * res.x[m * rank:]).reshape(m, rank)
            best = (float(res.fun), z, m)
        restart_values.append(best[0])

    value, z, m = best
    c, _, _, _ = _polar_factors(z)
    phi = c @ wm
    p = np.einsum("mi,mi->m", phi, phi.conj()).real
    live = p > 1e-12
    members = phi[live] / np.sqrt(p[live])[:, None]
    return RoofResult(
        value=value,
        probabilities=p[live],
        members=members,
        ensemble_size=m,
        restart_values=tuple(restart_values),
    )


def convex_roof_itangle(rho: DensityMatrix, options: RoofOptions = RoofOptions()) -> float:
    """Best found mixed-state tangle (see convex_roof_decomposition)."""
    return convex_roof_decomposition(rho, options).value


# ---------------------------------------------------------------------------
# reports and the residual tangle
# ---------------------------------------------------------------------------

TANGLE_FLOOR = -1e-9


@dataclass(frozen=True)
class TangleReport:
    """All tangles of one two-atom/field pure state at one instant.

    ``tau_F_AA``: field versus both atoms; ``tau_A_rest``: atom 1 versus
    everything else; ``tau_AA``: atom-atom Wootters tangle; ``tau_AF``:
    atom 1 versus field (mixed-state tangle); ``tau_res``: residual
    three-party tangle (None when not requested); ``field_eff_dim``:
    effective dimension of the field marginal, logged because the
    residual's rescaling depends on it.
    """

    t: float
    tau_F_AA: float
    tau_A_rest: float
    tau_AA: float
    tau_AF: float
    tau_res: Optional[float]
    inversion: float
    field_eff_dim: int

    def __post_init__(self):
        named = {
            "tau_F_AA": self.tau_F_AA,
            "tau_A_rest": self.tau_A_rest,
            "tau_AA": self.tau_AA,
            "tau_AF": self.tau_AF,
        }
        if self.tau_res is not None:
            named["tau_res"] = self.tau_res
        for name, value in named.items():
            if value < TANGLE_FLOOR:
                raise ValueError(f"{name} = {value!r} below the numerical floor")
        for name in ("tau_AA", "tau_A_rest"):
            if named[name] > 1.0 + 1e-9:
                raise ValueError(f"{name} = {named[name]!r} above 1")
        if abs(self.inversion) > 1.0 + 1e-9:
            raise ValueError(f"inversion = {self.inversion!r} outside [-1, 1]")


def _tcm_tangles(state: PureState, t: float, rank_tol: float, with_residual: bool) -> TangleReport:
    dims = state.shape.dims
    if len(dims) != 3 or dims[0] != 2 or dims[1] != 2:
        raise ValueError("expected a (2, 2, field) pure state")
    dfield = dims[2]
    tens = state.tensor()
    rho_aa = tens.reshape(4, dfield) @ tens.reshape(4, dfield).conj().T
    rho_a1 = np.einsum("ijk,ljk->il", tens, tens.conj())
    rho_a2 = np.einsum("ijk,imk->jm", tens, tens.conj())

    aa_evals = np.linalg.eigvalsh(rho_aa)
    a1_evals = np.linalg.eigvalsh(rho_a1)
    a2_evals = np.linalg.eigvalsh(rho_a2)
    purity_aa = float(np.sum(aa_evals**2))
    purity_a1 = float(np.sum(a1_evals**2))
    purity_a2 = float(np.sum(a2_evals**2))
    # both sides of a pure-state cut carry the same nonzero spectrum, so
    # the field marginal never has to be materialized
    d_field = int(np.count_nonzero(aa_evals > rank_tol))
    d_a1 = int(np.count_nonzero(a1_evals > rank_tol))
    d_a2 = int(np.count_nonzero(a2_evals > rank_tol))

    tau_f_aa = 2.0 * (1.0 - purity_aa)
    tau_a_rest = 2.0 * (1.0 - purity_a1)
    tau_aa = float(_wootters_batch(rho_aa[None])[0])
    tau_a1f = float(_rank2_tangle_core(tens.transpose(1, 0, 2)[None], rank_tol)[0])

    p_ee = float(np.sum(np.abs(tens[0, 0]) ** 2))
    p_gg = float(np.sum(np.abs(tens[1, 1]) ** 2))

    tau_res = None
    if with_residual:
        tau_a2_rest = 2.0 * (1.0 - purity_a2)
        tau_a2f = float(_rank2_tangle_core(tens[None], rank_tol)[0])
        one_vs_rest = (
            d_a1 / 2.0 * tau_a_rest
            + d_a2 / 2.0 * tau_a2_rest
            + d_field / 2.0 * tau_f_aa
        )
        pairwise = (
            min(d_a1, d_a2) / 2.0 * tau_aa
            + min(d_a1, d_field) / 2.0 * tau_a1f
            + min(d_a2, d_field) / 2.0 * tau_a2f
        )
        tau_res = (one_vs_rest - 2.0 * pairwise) / 3.0

    return TangleReport(
        t=t,
        tau_F_AA=tau_f_aa,
        tau_A_rest=tau_a_rest,
        tau_AA=tau_aa,
        tau_AF=tau_a1f,
        tau_res=tau_res,
        inversion=p_ee - p_gg,
        field_eff_dim=d_field,
    )


def bipartite_tangles_all(
    state: PureState, t: float = 0.0, rank_tol: float = DEFAULT_RANK_TOL
) -> TangleReport:
    """All four bipartite tangles of a two-atom/field pure state.

    The atom-field pair state has rank <= 2 (its complement is a qubit),
    so ``tau_AF`` comes from the rank-2 closed form.  ``tau_res`` is left
    unset; use ``tangle_report`` to include it.
    """
    return _tcm_tangles(state, t, rank_tol, with_residual=False)


def tangle_report(
    state: PureState, t: float = 0.0, rank_tol: float = DEFAULT_RANK_TOL
) -> TangleReport:
    """bipartite_tangles_all plus the residual three-party tangle."""
    return _tcm_tangles(state, t, rank_tol, with_residual=True)


def _pair_tangle_generic(
    rho: DensityMatrix, rank_tol: float, roof_options: Optional[RoofOptions]
) -> float:
    """Mixed pair tangle: Wootters for qubit pairs, rank-2 closed form when
    applicable, convex roof otherwise."""
    if rho.dims == (2, 2):
        return wootters_tangle(rho)
    if effective_rank(rho, rank_tol) <= 2:
        return rank2_itangle(rho, rank_tol)
    return convex_roof_itangle(rho, roof_options or RoofOptions())


def i_residual_tangle(
    state: PureState,
    rank_tol: float = DEFAULT_RANK_TOL,
    roof_options: Optional[RoofOptions] = None,
) -> float:
    """Residual three-party tangle of a tripartite pure state.

    (1/3) * sum of the three one-versus-rest tangles minus (2/3) * sum of
    the three pairwise mixed tangles, every term rescaled by d/2 with d
    the smaller effective dimension (rank of the marginal at ``rank_tol``)
    of the term's two sides.  Values are reported as computed; tiny
    negative dust is not clamped.
    """
    if rank_tol <= 0:
        raise ValueError("rank_tol must be positive")
    dims = state.shape.dims
    if len(dims) != 3:
        raise ValueError("residual tangle needs exactly three factors")

    marg = [partial_trace(state, (i,)) for i in range(3)]
    eff = [effective_rank(m, rank_tol) for m in marg]
    pur = [purity(m) for m in marg]

    one_vs_rest = 0.0
    for i in range(3):
        rest = tuple(j for j in range(3) if j != i)
        d = min(eff[i], effective_rank(partial_trace(state, rest), rank_tol))
        one_vs_rest += d / 2.0 * 2.0 * (1.0 - pur[i])

    pairwise = 0.0
    for i, j in ((0, 1), (0, 2), (1, 2)):
        rho_pair = partial_trace(state, (i, j))
        d = min(eff[i], eff[j])
        pairwise += d / 2.0 * _pair_tangle_generic(rho_pair, rank_tol, roof_options)

    return (one_vs_rest - 2.0 * pairwise) / 3.0


# ---------------------------------------------------------------------------
# batched residual tangle for the positivity sweep
# ---------------------------------------------------------------------------

def _effective_ranks(evals: np.ndarray, rank_tol: float) -> np.ndarray:
    return np.count_nonzero(evals > rank_tol, axis=-1)


def residual_tangle_batch(
    states: np.ndarray, dims: Sequence[int], rank_tol: float = DEFAULT_RANK_TOL
) -> np.ndarray:
    """i_residual_tangle over a (N, total_dim) stack of (2, 2, D) states.

    Vectorized: every pairwise term has a qubit on one side, so the two
    mixed pair routes are the batched Wootters form (atom-atom) and the
    batched rank-2 closed form with the spare atom as purifier
    (atom-field).  Agrees with the scalar path to roundoff.
    """
    d1, d2, dfield = dims
    if (d1, d2) != (2, 2):
        raise ValueError("batch residual supports (2, 2, D) systems only")
    t = states.reshape(-1, 2, 2, dfield)
    tc = t.conj()

    rho_a1 = np.einsum("nijk,nljk->nil", t, tc)
    rho_a2 = np.einsum("nijk,nimk->njm", t, tc)
    rho_f = np.einsum("nijk,nijm->nkm", t, tc)
    rho_aa = np.einsum("nak,nbk->nab", t.reshape(-1, 4, dfield), tc.reshape(-1, 4, dfield))

    ev_a1 = np.linalg.eigvalsh(rho_a1)
    ev_a2 = np.linalg.eigvalsh(rho_a2)
    ev_f = np.linalg.eigvalsh(rho_f)
    d_a1 = _effective_ranks(ev_a1, rank_tol)
    d_a2 = _effective_ranks(ev_a2, rank_tol)
    d_f = _effective_ranks(ev_f, rank_tol)
    pur_a1 = np.sum(ev_a1**2, axis=-1)
    pur_a2 = np.sum(ev_a2**2, axis=-1)
    pur_f = np.sum(ev_f**2, axis=-1)

    one_vs_rest = (
        d_a1 * (1.0 - pur_a1) + d_a2 * (1.0 - pur_a2) + d_f * (1.0 - pur_f)
    )

    tau_aa = _wootters_batch(rho_aa)
    tau_a1f = _rank2_tangle_core(t.transpose(0, 2, 1, 3), rank_tol)
    tau_a2f = _rank2_tangle_core(t, rank_tol)
    pairwise = (
        np.minimum(d_a1, d_a2) / 2.0 * tau_aa
        + np.minimum(d_a1, d_f) / 2.0 * tau_a1f
        + np.minimum(d_a2, d_f) / 2.0 * tau_a2f
    )

    return (one_vs_rest - 2.0 * pairwise) / 3.0
