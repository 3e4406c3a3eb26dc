"""Hermitian eigendecomposition and the operator functions built on it."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable

import numpy as np

from .spin import SpinOperator, as_matrix, hermiticity_error

HERMITIAN_TOL = 1e-10


class NotHermitianError(ValueError):
    pass


class DomainError(ValueError):
    """A matrix function was asked for a value outside its domain."""


def _sites_of(dim: int) -> int | None:
    sites = dim.bit_length() - 1
    return sites if sites >= 1 and 2**sites == dim else None


def _wrap(matrix: np.ndarray):
    sites = _sites_of(matrix.shape[0])
    return SpinOperator(matrix, sites) if sites else matrix


def _check_hermitian(a: np.ndarray, tol: float = HERMITIAN_TOL) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {a.shape}")
    err = hermiticity_error(a)
    if err > tol * max(1.0, float(np.max(np.abs(a), initial=0.0))):
        raise NotHermitianError(f"operator is not Hermitian (max |A - A^dag| = {err:.3g})")


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """Eigenvalues in ascending order and the unitary whose columns are the
    matching eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        self.eigenvalues.setflags(write=False)
        self.eigenvectors.setflags(write=False)

    @property
    def source_dim(self) -> int:
        return self.eigenvalues.shape[0]

    def apply(self, values: np.ndarray) -> np.ndarray:
        """V diag(values) V^dag for values given per eigenvalue."""
        v = self.eigenvectors
        return (v * values) @ v.conj().T

    def reconstruct(self) -> np.ndarray:
        return self.apply(self.eigenvalues)

    def propagator(self, t: float) -> np.ndarray:
        return self.apply(np.exp(-1j * t * self.eigenvalues))


def eig_hermitian(a) -> SpectralDecomposition:
    if isinstance(a, SpectralDecomposition):
        return a
    m = as_matrix(a)
    _check_hermitian(m)
    # symmetrize so eigh sees exactly the Hermitian part
    evals, evecs = np.linalg.eigh(0.5 * (m + m.conj().T))
    return SpectralDecomposition(evals, evecs)


def propagator(h, t: float):
    """U = exp(-i H t). ``h`` may be an operator or a precomputed decomposition."""
    return _wrap(eig_hermitian(h).propagator(t))


def operator_exponential(o, u: float):
    """V = exp(+i u O)."""
    return _wrap(eig_hermitian(o).propagator(-u))


def matrix_function(a, f: Callable[[np.ndarray], np.ndarray]):
    """V f(lambda) V^dag. Raises DomainError where f is undefined on the spectrum."""
    dec = eig_hermitian(a)
    try:
        with np.errstate(all="raise"):
            values = np.asarray(f(dec.eigenvalues))
    except (FloatingPointError, ValueError) as exc:
        raise DomainError(f"function undefined on spectrum: {exc}") from exc
    if not np.all(np.isfinite(values)):
        raise DomainError("function produced non-finite values on the spectrum")
    return _wrap(dec.apply(values))


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """Positive, unit-trace Hermitian operator."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def validate(self, tol: float = 1e-10) -> "DensityMatrix":
        m = self.matrix
        if hermiticity_error(m) > tol:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > tol:
            raise ValueError(f"density matrix trace is {np.trace(m).real:.12g}, not 1")
        if np.linalg.eigvalsh(m)[0] < -tol:
            raise ValueError("density matrix has negative eigenvalues")
        return self

    def evolve(self, u) -> "DensityMatrix":
        u = as_matrix(u)
        return DensityMatrix(u @ self.matrix @ u.conj().T)


def thermal_state(h0, beta: float) -> DensityMatrix:
    """Gibbs state exp(-beta H0)/Z, shifted by the ground energy before exponentiating."""
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and >= 0, got {beta}")
    dec = eig_hermitian(h0)
    weights = np.exp(-beta * (dec.eigenvalues - dec.eigenvalues[0]))
    return DensityMatrix(dec.apply(weights / weights.sum()))


def default_cluster_tol(eigenvalues: np.ndarray) -> float:
    spread = float(eigenvalues[-1] - eigenvalues[0]) if len(eigenvalues) else 0.0
    return 1e-8 * max(1.0, spread)


@dataclass(frozen=True, eq=False)
class SpectralCluster:
    value: float
    basis: np.ndarray  # dim x multiplicity, orthonormal columns

    @property
    def multiplicity(self) -> int:
        return self.basis.shape[1]

    @cached_property
    def projector(self) -> np.ndarray:
        return self.basis @ self.basis.conj().T


@dataclass(frozen=True, eq=False)
class ProjectorFamily:
    """Eigenspaces of an observable grouped by (nearly) equal eigenvalue."""

    clusters: tuple[SpectralCluster, ...]
    cluster_tol: float

    def __len__(self) -> int:
        return len(self.clusters)

    def __iter__(self):
        return iter(self.clusters)

    @property
    def values(self) -> np.ndarray:
        return np.array([c.value for c in self.clusters])

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([c.multiplicity for c in self.clusters])

    @property
    def dim(self) -> int:
        return int(self.multiplicities.sum())

    @property
    def spread(self) -> float:
        vals = self.values
        return float(vals[-1] - vals[0])

    def basis(self) -> np.ndarray:
        """All eigenvectors, columns grouped cluster by cluster."""
        return np.hstack([c.basis for c in self.clusters])

    def slices(self) -> list[slice]:
        out, start = [], 0
        for c in self.clusters:
            out.append(slice(start, start + c.multiplicity))
            start += c.multiplicity
        return out


def spectral_projectors(o, cluster_tol: float | None = None) -> ProjectorFamily:
    """Group the sorted spectrum greedily: an eigenvalue joins the current
    cluster when its gap to the previous one is at most ``cluster_tol``."""
    dec = eig_hermitian(o)
    lam = dec.eigenvalues
    if cluster_tol is None:
        cluster_tol = default_cluster_tol(lam)
    if not cluster_tol > 0:
        raise ValueError(f"cluster_tol must be positive, got {cluster_tol}")
    breaks = np.flatnonzero(np.diff(lam) > cluster_tol) + 1
    bounds = np.concatenate(([0], breaks, [len(lam)]))
    clusters = tuple(
        SpectralCluster(float(lam[a:b].mean()), dec.eigenvectors[:, a:b])
        for a, b in zip(bounds[:-1], bounds[1:])
    )
    return ProjectorFamily(clusters, float(cluster_tol))
