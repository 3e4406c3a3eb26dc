"""Direct OTOC and commutator computations from operator dynamics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .spectral import eig_hermitian
from .spin import DimensionError, SpinOperator, as_matrix, commutator, unitarity_error

UNITARY_TOL = 1e-8


@dataclass(frozen=True)
class OtocPoint:
    tau: float
    value: complex

    @property
    def c_value(self) -> float:
        return 2.0 * (1.0 - self.value.real)


def _same_dim(*ops: np.ndarray) -> None:
    dims = {op.shape for op in ops}
    if len(dims) != 1:
        raise DimensionError(f"operator dimensions differ: {sorted(dims)}")


def _expect(rho: np.ndarray, a: np.ndarray) -> complex:
    # Tr(rho A) without forming the product
    return complex(np.sum(rho * a.T))


def heisenberg_wingflap(w, h, tau: float):
    """W_tau = exp(i tau H) W exp(-i tau H), the wing-flap seen in the Heisenberg picture.

    ``h`` may be a precomputed SpectralDecomposition, which is what a tau sweep
    should pass.
    """
    wm = as_matrix(w)
    if unitarity_error(wm) > UNITARY_TOL:
        raise ValueError("wing-flap operator is not unitary")
    dec = eig_hermitian(h)
    _same_dim(wm, dec.eigenvectors)
    v = dec.eigenvectors
    out = evolve_in_eigenbasis(v.conj().T @ wm @ v, dec, tau)
    sites = getattr(w, "sites", None)
    return SpinOperator(out, sites) if sites else out


def evolve_in_eigenbasis(w_eig: np.ndarray, dec, tau: float) -> np.ndarray:
    """Heisenberg evolution of an operator already expressed in the eigenbasis of H.

    (W_tau)_{ab} = e^{i tau (l_a - l_b)} W_{ab} there; the result is returned
    in the original basis.
    """
    v = dec.eigenvectors
    phase = np.exp(1j * tau * dec.eigenvalues)
    return v @ (phase[:, None] * w_eig * phase.conj()[None, :]) @ v.conj().T


def otoc_from_heisenberg(rho, w_tau, v) -> complex:
    """Tr(rho W_tau^dag V^dag W_tau V) for an already evolved W_tau."""
    rho, wt, vm = as_matrix(rho), as_matrix(w_tau), as_matrix(v)
    _same_dim(rho, wt, vm)
    return _expect(rho, wt.conj().T @ vm.conj().T @ wt @ vm)


def otoc(rho, w, v, h, tau: float) -> complex:
    """F_{V,W}(tau) = Tr(rho W_tau^dag V^dag W_tau V)."""
    return otoc_from_heisenberg(rho, heisenberg_wingflap(w, h, tau), v)


def commutator_measure(rho, w, v, h, tau: float) -> float:
    """C(tau) = <[W_tau, V]^dag [W_tau, V]>, evaluated from the commutator itself."""
    w_tau = heisenberg_wingflap(w, h, tau)
    comm = commutator(w_tau, v)
    return float(_expect(as_matrix(rho), comm.conj().T @ comm).real)


def square_commutator_expectation(w_tau, o, rho, *, cross_check: bool = False) -> float:
    """<[W_tau, O]^dag [W_tau, O]>_rho, computed as Tr((W_tau^dag O W_tau - O)^2 rho).

    With ``cross_check`` the commutator form is evaluated as well and the two
    must agree to 1e-10 (relative to the scale of O^2).
    """
    wt, om, rm = as_matrix(w_tau), as_matrix(o), as_matrix(rho)
    _same_dim(wt, om, rm)
    d = wt.conj().T @ om @ wt - om
    value = _expect(rm, d @ d).real
    if cross_check:
        comm = commutator(wt, om)
        other = _expect(rm, comm.conj().T @ comm).real
        scale = max(1.0, float(np.max(np.abs(om))) ** 2)
        if abs(value - other) > 1e-10 * scale:
            raise ArithmeticError(
                f"square-commutator forms disagree: {value!r} vs {other!r}"
            )
    return float(value)


def infinite_temperature_otoc(w_tau, h0) -> float:
    """Tr(W_tau^dag H0 W_tau H0) - Tr(H0^2); never positive."""
    wt, hm = as_matrix(w_tau), as_matrix(h0)
    _same_dim(wt, hm)
    return float((np.trace(wt.conj().T @ hm @ wt @ hm) - np.trace(hm @ hm)).real)
