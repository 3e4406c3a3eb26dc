"""Two-point-measurement statistics and the thermodynamic quantities read off them.

An observable O is measured projectively (Lueders rule on each eigenvalue
cluster), the system is driven by a unitary U_tau, and O is measured again.
The change Delta O = O_final - O_initial is the random variable; with O = H0 it
is the work w.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .scrambling import UNITARY_TOL, heisenberg_wingflap, otoc_from_heisenberg
from .spectral import (
    DensityMatrix,
    ProjectorFamily,
    matrix_function,
    operator_exponential,
    spectral_projectors,
)
from .spin import DimensionError, as_matrix, hermiticity_error, unitarity_error

P_FLOOR = 1e-14
COMMUTE_TOL = 1e-8
ZERO_EIG = 1e-14


class NonCommutingStateError(ValueError):
    """The initial state does not commute with the measured observable."""


@dataclass(frozen=True, eq=False)
class TransitionMatrix:
    """Cluster-level P[m|n]; rows are final clusters, columns initial ones.

    Columns of unvisited clusters (p_n <= P_FLOOR) are zero and flagged in
    ``visited``.
    """

    probs: np.ndarray
    initial_probs: np.ndarray
    values: np.ndarray
    visited: np.ndarray

    @property
    def joint(self) -> np.ndarray:
        """Joint probability of (final m, initial n)."""
        return self.probs * self.initial_probs[None, :]


@dataclass(frozen=True, eq=False)
class OutcomeDistribution:
    support: np.ndarray
    probs: np.ndarray
    merge_tol: float

    def __len__(self) -> int:
        return len(self.support)

    def prob_at(self, x: float) -> float:
        hit = np.abs(self.support - x) <= self.merge_tol
        return float(self.probs[hit].sum())

    @classmethod
    def point_mass(cls, x: float = 0.0, merge_tol: float = 1e-9) -> "OutcomeDistribution":
        return cls(np.array([float(x)]), np.array([1.0]), merge_tol)


@dataclass(frozen=True)
class Moments:
    mean: float
    second_moment: float

    @property
    def variance(self) -> float:
        return self.second_moment - self.mean**2


def _projectors_for(o, cluster_tol) -> ProjectorFamily:
    if isinstance(o, ProjectorFamily):
        return o
    return spectral_projectors(o, cluster_tol)


def _check_commutes(rho: np.ndarray, projs: ProjectorFamily) -> None:
    # [rho, O] = 0 for every O with these eigenspaces iff rho is block diagonal in them
    b = projs.basis()
    r = b.conj().T @ rho @ b
    for s in projs.slices():
        r[s, s] = 0.0
    off = float(np.max(np.abs(r), initial=0.0))
    if off > COMMUTE_TOL:
        raise NonCommutingStateError(
            f"initial state does not commute with the measured observable (off-block {off:.3g})"
        )


def transition_matrix(rho, projs: ProjectorFamily, u_tau) -> TransitionMatrix:
    """P[m|n] = Tr(Pi_m U Pi_n rho Pi_n U^dag) / p_n, with p_n = Tr(Pi_n rho)."""
    rm, um = as_matrix(rho), as_matrix(u_tau)
    if rm.shape != um.shape or rm.shape[0] != projs.dim:
        raise DimensionError("state, unitary and observable dimensions differ")
    if unitarity_error(um) > UNITARY_TOL:
        raise ValueError("U_tau is not unitary")
    _check_commutes(rm, projs)
    b = projs.basis()
    return transitions_in_eigenbasis(b.conj().T @ rm @ b, b.conj().T @ um @ b, projs)


def transitions_in_eigenbasis(r_eig: np.ndarray, u_eig: np.ndarray, projs: ProjectorFamily) -> TransitionMatrix:
    """Transition matrix from the state and the unitary written in the
    eigenbasis of O (the column order of ``projs.basis()``). No checks."""
    slices = projs.slices()
    k = len(slices)
    joint = np.zeros((k, k))
    p_init = np.array([np.trace(r_eig[s, s]).real for s in slices])
    for n, sn in enumerate(slices):
        cols = u_eig[:, sn]
        # diagonal of U Pi_n rho Pi_n U^dag in the eigenbasis of O
        diag = np.sum((cols @ r_eig[sn, sn]) * cols.conj(), axis=1).real
        joint[:, n] = [diag[sm].sum() for sm in slices]

    visited = p_init > P_FLOOR
    probs = np.zeros_like(joint)
    probs[:, visited] = joint[:, visited] / p_init[visited]
    p_init = np.where(visited, p_init, 0.0)
    return TransitionMatrix(probs, p_init / p_init.sum(), projs.values, visited)


def _merge(values: np.ndarray, weights: np.ndarray, tol: float):
    order = np.argsort(values, kind="stable")
    values, weights = values[order], weights[order]
    breaks = np.flatnonzero(np.diff(values) > tol) + 1
    bounds = np.concatenate(([0], breaks, [len(values)]))
    support = np.array([values[a:b].mean() for a, b in zip(bounds[:-1], bounds[1:])])
    probs = np.add.reduceat(weights, bounds[:-1]) if len(values) else weights
    return support, probs


def default_merge_tol(projs: ProjectorFamily) -> float:
    return 1e-9 * max(1.0, projs.spread)


def distribution_from_transitions(tm: TransitionMatrix, merge_tol: float) -> OutcomeDistribution:
    vals = tm.values
    diffs = vals[:, None] - vals[None, :]
    cols = tm.visited
    support, probs = _merge(diffs[:, cols].ravel(), tm.joint[:, cols].ravel(), merge_tol)
    probs = np.clip(probs, 0.0, None)
    return OutcomeDistribution(support, probs / probs.sum(), merge_tol)


def tpm_distribution(rho, o, u_tau, cluster_tol=None, merge_tol=None) -> OutcomeDistribution:
    """Exact p(Delta O): sum over cluster pairs of delta(Delta O - O_m + O_n) P[m|n] p_n.

    ``o`` may be an operator or a prebuilt ProjectorFamily.
    """
    projs = _projectors_for(o, cluster_tol)
    if merge_tol is None:
        merge_tol = default_merge_tol(projs)
    tm = transition_matrix(rho, projs, u_tau)
    return distribution_from_transitions(tm, merge_tol)


def characteristic_function(dist: OutcomeDistribution, u: float) -> complex:
    """G(u) = sum_j p_j exp(-i u Delta O_j)."""
    return complex(np.sum(dist.probs * np.exp(-1j * u * dist.support)))


def verify_otoc_identity(rho, o, w, h, tau: float, u: float, cluster_tol=None):
    """Compute the OTOC directly and as the characteristic function of the
    wing-flap outcome statistics. Returns (F, G, |F - G|)."""
    projs = _projectors_for(o, cluster_tol)
    w_tau = heisenberg_wingflap(w, h, tau)
    obs = _observable(projs) if isinstance(o, ProjectorFamily) else o
    v = operator_exponential(obs, u)
    f = otoc_from_heisenberg(rho, w_tau, v)
    g = characteristic_function(tpm_distribution(rho, projs, w_tau), u)
    return f, g, abs(f - g)


def _observable(projs: ProjectorFamily) -> np.ndarray:
    b = projs.basis()
    vals = np.repeat(projs.values, projs.multiplicities)
    return (b * vals) @ b.conj().T


def moments(dist: OutcomeDistribution) -> Moments:
    return Moments(
        mean=float(np.sum(dist.probs * dist.support)),
        second_moment=float(np.sum(dist.probs * dist.support**2)),
    )


def _xlogx_trace(rho: np.ndarray) -> float:
    lam = np.linalg.eigvalsh(rho)
    lam = lam[lam > ZERO_EIG]
    return float(np.sum(lam * np.log(lam)))


def relative_entropy(rho_tau, rho) -> float:
    """S[rho_tau || rho] = Tr(rho_tau ln rho_tau) - Tr(rho_tau ln rho).

    Eigenvalues of rho_tau below 1e-14 are dropped from the first term; a
    singular ``rho`` raises DomainError.
    """
    st, sr = as_matrix(rho_tau), as_matrix(rho)
    log_rho = as_matrix(matrix_function(sr, np.log))
    cross = np.einsum("ij,ji->", st, log_rho).real
    return _xlogx_trace(st) - float(cross)


def trace_norm(a) -> float:
    """Sum of singular values; for Hermitian input, the sum of |eigenvalues|."""
    m = as_matrix(a)
    if hermiticity_error(m) <= 1e-12 * max(1.0, float(np.max(np.abs(m), initial=0.0))):
        return float(np.sum(np.abs(np.linalg.eigvalsh(m))))
    return float(np.linalg.norm(m, ord="nuc"))


def pinsker_gap(rho_tau, rho):
    """(S, |rho_tau - rho|_1^2 / 2, S - bound)."""
    s = relative_entropy(rho_tau, rho)
    bound = 0.5 * trace_norm(as_matrix(rho_tau) - as_matrix(rho)) ** 2
    return s, bound, s - bound


def dissipation_check(rho, beta: float, h0, u_tau, cluster_tol=None):
    """(mean work, S[rho_tau||rho], |mean work - S/beta|) for a thermal initial state.

    At beta = 0 the entropy is divided by nothing; the gap is then |mean work|.
    """
    dist = tpm_distribution(rho, h0, u_tau, cluster_tol)
    mean_w = moments(dist).mean
    rho_tau = DensityMatrix(rho).evolve(u_tau)
    s_rel = relative_entropy(rho_tau, rho)
    gap = abs(mean_w - s_rel / beta) if beta > 0 else abs(mean_w)
    return mean_w, s_rel, gap


def jarzynski_check(dist: OutcomeDistribution, beta: float) -> float:
    """<exp(-beta w)>, equal to 1 for a thermal start and a cyclic protocol."""
    return float(np.sum(dist.probs * np.exp(-beta * dist.support)))


def linear_response_gap(m: Moments, beta: float) -> float:
    """<w> - beta var(w) / 2, signed."""
    return m.mean - 0.5 * beta * m.variance


def service_state_work(u_tau, h0, c: float) -> float:
    """Tr((U^dag H0 U - H0)(H0 + c)), the mean work for the unnormalized
    service preparation H0 + c."""
    um, hm = as_matrix(u_tau), as_matrix(h0)
    if um.shape != hm.shape:
        raise DimensionError("U_tau and H0 dimensions differ")
    d = um.conj().T @ hm @ um - hm
    return float(np.trace(d @ (hm + c * np.eye(hm.shape[0]))).real)
