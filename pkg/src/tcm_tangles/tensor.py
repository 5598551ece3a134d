"""Pure states and density matrices over small tensor-product Hilbert spaces.

Amplitude vectors and matrices are indexed in C order over the listed
factors, so the *last* factor's index varies fastest.  For the two-atom
cavity model the factor order is (atom 1, atom 2, field).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence, Union

import numpy as np

NORM_TOL = 1e-12
HERMITICITY_TOL = 1e-12
NEGATIVE_EIGENVALUE_TOL = 1e-10
DEFAULT_RANK_TOL = 1e-10


@dataclass(frozen=True)
class SystemShape:
    """Ordered factor dimensions of a tensor-product Hilbert space."""

    dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        if len(dims) == 0:
            raise ValueError("SystemShape needs at least one factor")
        if any(d < 1 for d in dims):
            raise ValueError(f"factor dimensions must be >= 1, got {dims}")
        object.__setattr__(self, "dims", dims)

    @property
    def n_factors(self) -> int:
        return len(self.dims)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)


@dataclass(frozen=True)
class PureState:
    """Normalized state vector together with its factor structure.

    Parameters
    ----------
    shape : SystemShape
        Factor dimensions.
    amplitudes : array_like
        Complex amplitudes of length ``shape.total_dim`` in C order over
        the factors.  Must be normalized to unity within ``NORM_TOL``.
    """

    shape: SystemShape
    amplitudes: np.ndarray

    def __post_init__(self):
        amps = np.array(self.amplitudes, dtype=complex).ravel()
        if amps.size != self.shape.total_dim:
            raise ValueError(
                f"amplitude vector has length {amps.size}, expected {self.shape.total_dim}"
            )
        norm = np.linalg.norm(amps)
        if abs(norm - 1.0) > NORM_TOL:
            raise ValueError(f"state vector is not normalized: |norm - 1| = {abs(norm - 1.0):.3e}")
        amps.setflags(write=False)
        object.__setattr__(self, "amplitudes", amps)

    def tensor(self) -> np.ndarray:
        """Amplitudes reshaped to one axis per factor."""
        return self.amplitudes.reshape(self.shape.dims)


@dataclass(frozen=True)
class DensityMatrix:
    """Density matrix on a subset of factors.

    ``dims`` records the retained factor dimensions in their original
    order; ``matrix`` is Hermitian, unit trace and positive semidefinite
    up to small numerical dust.
    """

    dims: tuple[int, ...]
    matrix: np.ndarray

    def __post_init__(self):
        dims = tuple(int(d) for d in self.dims)
        mat = np.array(self.matrix, dtype=complex)
        d = math.prod(dims)
        if mat.shape != (d, d):
            raise ValueError(f"matrix shape {mat.shape} does not match dims {dims}")
        if np.max(np.abs(mat - mat.conj().T)) > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(mat).real - 1.0) > 1e-10 or abs(np.trace(mat).imag) > HERMITICITY_TOL:
            raise ValueError(f"density matrix trace is {np.trace(mat):.12g}, expected 1")
        if np.linalg.eigvalsh(mat)[0] < -NEGATIVE_EIGENVALUE_TOL:
            raise ValueError("density matrix has a significantly negative eigenvalue")
        mat.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", mat)

    @property
    def total_dim(self) -> int:
        return math.prod(self.dims)


@dataclass(frozen=True)
class Cut:
    """Bipartition of the factor indices of a multipartite state."""

    side_a: tuple[int, ...]
    side_b: tuple[int, ...]

    def __post_init__(self):
        a = tuple(int(i) for i in self.side_a)
        b = tuple(int(i) for i in self.side_b)
        if not a or not b:
            raise ValueError("both sides of a cut must be non-empty")
        if set(a) & set(b):
            raise ValueError(f"cut sides overlap: {a} / {b}")
        object.__setattr__(self, "side_a", a)
        object.__setattr__(self, "side_b", b)

    def validate_for(self, shape: SystemShape) -> None:
        """Check the cut partitions exactly the factors of ``shape``."""
        if set(self.side_a) | set(self.side_b) != set(range(shape.n_factors)):
            raise ValueError(
                f"cut {self.side_a}/{self.side_b} does not partition {shape.n_factors} factors"
            )


def tensor_product(factors: Sequence[np.ndarray], shape: SystemShape | None = None) -> PureState:
    """Kronecker product of normalized single-factor vectors.

    Parameters
    ----------
    factors : sequence of array_like
        One normalized state vector per factor.
    shape : SystemShape, optional
        If given, the factor lengths must match ``shape.dims``.

    Returns
    -------
    PureState
        The (re-normalized) product state over all factors.
    """
    vecs = [np.asarray(f, dtype=complex).ravel() for f in factors]
    if not vecs:
        raise ValueError("need at least one factor")
    for i, v in enumerate(vecs):
        if abs(np.linalg.norm(v) - 1.0) > 1e-10:
            raise ValueError(f"factor {i} is not normalized")
    dims = tuple(v.size for v in vecs)
    if shape is not None and dims != shape.dims:
        raise ValueError(f"factor dimensions {dims} do not match declared shape {shape.dims}")
    out = vecs[0]
    for v in vecs[1:]:
        out = np.kron(out, v)
    out = out / np.linalg.norm(out)
    return PureState(SystemShape(dims), out)


def _ptrace_pure(tens: np.ndarray, keep: tuple[int, ...]) -> np.ndarray:
    """Partial trace of |psi><psi| given the state as an ndarray, raw matrix out."""
    n = tens.ndim
    traced = tuple(i for i in range(n) if i not in keep)
    d_keep = math.prod(tens.shape[i] for i in keep)
    mat = np.transpose(tens, keep + traced).reshape(d_keep, -1)
    return mat @ mat.conj().T


def _ptrace_mixed(rho: np.ndarray, dims: tuple[int, ...], keep: tuple[int, ...]) -> np.ndarray:
    """Partial trace of a density matrix over the factors not in ``keep``."""
    n = len(dims)
    tens = rho.reshape(dims + dims)
    rows = list(range(n))
    cols = [i + n if i in keep else i for i in range(n)]
    out = [i for i in keep] + [i + n for i in keep]
    d_keep = math.prod(dims[i] for i in keep)
    return np.einsum(tens, rows + cols, out).reshape(d_keep, d_keep)


def partial_trace(state: Union[PureState, DensityMatrix], keep) -> DensityMatrix:
    """Reduced density matrix on the factors listed in ``keep``.

    Parameters
    ----------
    state : PureState or DensityMatrix
        Global state.
    keep : iterable of int
        Factor positions to retain, e.g. ``(0, 2)`` for atom 1 + field.

    Returns
    -------
    DensityMatrix
        Reduced state with ``dims`` equal to the retained factor sizes.
    """
    keep = tuple(sorted({int(k) for k in keep}))
    if isinstance(state, PureState):
        dims = state.shape.dims
    else:
        dims = state.dims
    n = len(dims)
    if not keep:
        raise ValueError("must keep at least one factor")
    if any(k < 0 or k >= n for k in keep):
        raise ValueError(f"keep indices {keep} out of range for {n} factors")
    if len(keep) == n:
        raise ValueError("partial trace must discard at least one factor")
    if isinstance(state, PureState):
        mat = _ptrace_pure(state.tensor(), keep)
    else:
        mat = _ptrace_mixed(state.matrix, dims, keep)
    return DensityMatrix(tuple(dims[i] for i in keep), mat)


def purity(rho: DensityMatrix) -> float:
    """tr(rho^2); lies in [1/d, 1] for a d-dimensional state."""
    m = rho.matrix
    return float(np.einsum("ij,ji->", m, m).real)


def effective_rank(rho: DensityMatrix, tol: float = DEFAULT_RANK_TOL) -> int:
    """Number of eigenvalues of ``rho`` exceeding ``tol``."""
    if tol <= 0:
        raise ValueError("tol must be positive")
    return int(np.count_nonzero(np.linalg.eigvalsh(rho.matrix) > tol))
