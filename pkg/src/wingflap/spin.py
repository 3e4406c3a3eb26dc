"""Operators on open spin-1/2 chains.

Basis convention: the computational basis is the sigma_z eigenbasis with
|0> = spin up (sigma_z = +1). Site 1 is the leftmost, slowest-varying tensor
factor, so ``embed_local(op, 1, L) = op (x) 1 (x) ... (x) 1``. Sites are
1-based. hbar = 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

MAX_SITES = 14

_PAULI = {
    "x": np.array([[0, 1], [1, 0]], dtype=complex),
    "y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": np.array([[1, 0], [0, -1]], dtype=complex),
}


class DimensionError(ValueError):
    """Chain too long for dense methods, or operator shapes that do not match."""


@dataclass(frozen=True, eq=False)
class SpinOperator:
    """Dense complex operator on ``sites`` spin-1/2 degrees of freedom.

    The wrapped matrix is made read-only so instances can be shared between
    threads. ``np.asarray(op)`` gives the matrix back.
    """

    matrix: np.ndarray
    sites: int

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if self.sites < 1:
            raise DimensionError(f"sites must be >= 1, got {self.sites}")
        if m.shape != (2**self.sites, 2**self.sites):
            raise DimensionError(
                f"matrix shape {m.shape} does not match {self.sites} sites"
            )
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    def __array__(self, dtype=None, copy=None):
        if dtype is None:
            return self.matrix
        return self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def dag(self) -> "SpinOperator":
        return SpinOperator(self.matrix.conj().T, self.sites)

    def __matmul__(self, other):
        if isinstance(other, SpinOperator):
            return SpinOperator(self.matrix @ other.matrix, self.sites)
        return self.matrix @ other

    def __add__(self, other: "SpinOperator") -> "SpinOperator":
        return SpinOperator(self.matrix + np.asarray(other), self.sites)

    def __sub__(self, other: "SpinOperator") -> "SpinOperator":
        return SpinOperator(self.matrix - np.asarray(other), self.sites)

    def __mul__(self, scalar) -> "SpinOperator":
        return SpinOperator(scalar * self.matrix, self.sites)

    __rmul__ = __mul__


@dataclass(frozen=True)
class ChainSpec:
    """Chain geometry and couplings. Defaults are the reference-preset values of the
    transverse-field quench used throughout the experiments."""

    L: int = 9
    g: float = 0.90450849
    J: float = 1.0
    h: float = 0.8090169
    site: int = 5
    theta: float = field(default=np.pi / 2)

    def __post_init__(self):
        check_sites(self.L)
        if not 1 <= self.site <= self.L:
            raise ValueError(f"wing-flap site {self.site} outside 1..{self.L}")


def check_sites(L: int) -> None:
    if L < 1:
        raise DimensionError(f"chain length must be >= 1, got {L}")
    if L > MAX_SITES:
        raise DimensionError(
            f"chain length {L} exceeds the dense-method cap of {MAX_SITES} sites"
        )


def as_matrix(op) -> np.ndarray:
    """Return the complex matrix behind a SpinOperator, DensityMatrix or array."""
    return np.asarray(op, dtype=complex)


def identity(L: int) -> SpinOperator:
    check_sites(L)
    return SpinOperator(np.eye(2**L, dtype=complex), L)


def pauli(axis: str) -> SpinOperator:
    try:
        return SpinOperator(_PAULI[axis.lower()], 1)
    except KeyError:
        raise ValueError(f"unknown Pauli axis {axis!r}; expected x, y or z") from None


def embed_local(op, site: int, L: int) -> SpinOperator:
    """Place a single-site operator on ``site`` of an ``L``-site chain."""
    check_sites(L)
    if not 1 <= site <= L:
        raise ValueError(f"site {site} outside 1..{L}")
    local = as_matrix(op)
    if local.shape != (2, 2):
        raise DimensionError(f"expected a single-site 2x2 operator, got {local.shape}")
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (L - site), dtype=complex)
    return SpinOperator(np.kron(np.kron(left, local), right), L)


def _z_diagonal(site: int, L: int) -> np.ndarray:
    # diagonal of sigma_z^site in the computational basis: bit (L - site) of the index
    idx = np.arange(2**L)
    bit = (idx >> (L - site)) & 1
    return 1.0 - 2.0 * bit


def build_h0(L: int, g: float) -> SpinOperator:
    """Transverse field g * sum_i sigma_x^i."""
    check_sites(L)
    sx = _PAULI["x"]
    terms = (embed_local(sx, i, L).matrix for i in range(1, L + 1))
    return SpinOperator(g * reduce(np.add, terms), L)


def build_h1(L: int, J: float) -> SpinOperator:
    """Ising coupling J * sum_{i<L} sigma_z^i sigma_z^{i+1}."""
    check_sites(L)
    if L < 2:
        raise ValueError("H1 needs at least two sites")
    diag = sum(_z_diagonal(i, L) * _z_diagonal(i + 1, L) for i in range(1, L))
    return SpinOperator(np.diag(J * diag).astype(complex), L)


def build_h2(L: int, J: float, h: float) -> SpinOperator:
    """Ising coupling plus longitudinal fields.

    H2 = J sum_{i<L} Z_i Z_{i+1} + h sum_{i=1}^{L-1} Z_i + (h - J)(Z_1 + Z_L),
    with the field sum stopping at site L - 1.
    """
    check_sites(L)
    if L < 2:
        raise ValueError("H2 needs at least two sites")
    diag = sum(_z_diagonal(i, L) * _z_diagonal(i + 1, L) for i in range(1, L)) * J
    diag = diag + h * sum(_z_diagonal(i, L) for i in range(1, L))
    diag = diag + (h - J) * (_z_diagonal(1, L) + _z_diagonal(L, L))
    return SpinOperator(np.diag(diag).astype(complex), L)


def build_wingflap(L: int, site: int, theta: float) -> SpinOperator:
    """Local x rotation W = exp(-i theta sigma_x^site) = cos(theta) - i sin(theta) sigma_x^site."""
    sx = embed_local(_PAULI["x"], site, L).matrix
    w = np.cos(theta) * np.eye(2**L, dtype=complex) - 1j * np.sin(theta) * sx
    return SpinOperator(w, L)


def commutator(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    return a @ b - b @ a


def hermiticity_error(a) -> float:
    a = as_matrix(a)
    return float(np.max(np.abs(a - a.conj().T)))


def unitarity_error(u) -> float:
    u = as_matrix(u)
    return float(np.max(np.abs(u.conj().T @ u - np.eye(u.shape[0]))))


def to_pairs(op) -> list[list[float]]:
    """Row-major (re, im) serialization used by test fixtures."""
    m = as_matrix(op)
    return [[float(z.real), float(z.imag)] for z in m.ravel(order="C")]


def from_pairs(pairs, sites: int) -> SpinOperator:
    flat = np.array([complex(re, im) for re, im in pairs])
    dim = 2**sites
    return SpinOperator(flat.reshape(dim, dim), sites)
