"""Shot-by-shot emulation of the wing-flap experiment.

Each shot draws the first outcome from p_n and the second from column n of the
cluster transition matrix. Randomness is counter based: shot ``i`` of stream
``s`` under seed ``k`` takes the Philox4x64-10 block at counter ``i`` with the
128-bit key ``k + 2**64 * s`` (numpy's ``Philox`` bit generator). Two of the
four 64-bit words become uniforms via the top 53 bits. Any split of the shots
into chunks therefore reproduces the same records bit for bit.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .tpm import OutcomeDistribution, TransitionMatrix, _merge, _projectors_for, transition_matrix

_WORDS_PER_SHOT = 4
_MASK64 = (1 << 64) - 1


@dataclass(frozen=True)
class ShotRecord:
    initial_cluster: int
    final_cluster: int
    delta_o: float


@dataclass(frozen=True, eq=False)
class ShotRecords:
    """Column storage for a run of shots, in shot-index order."""

    initial: np.ndarray
    final: np.ndarray
    delta_o: np.ndarray
    seed: int

    def __len__(self) -> int:
        return len(self.delta_o)

    def __getitem__(self, i: int) -> ShotRecord:
        return ShotRecord(int(self.initial[i]), int(self.final[i]), float(self.delta_o[i]))

    def __iter__(self):
        return (self[i] for i in range(len(self)))

    def __eq__(self, other) -> bool:
        if not isinstance(other, ShotRecords):
            return NotImplemented
        return (
            np.array_equal(self.initial, other.initial)
            and np.array_equal(self.final, other.final)
            and np.array_equal(self.delta_o, other.delta_o)
        )


@dataclass(frozen=True, eq=False)
class EmpiricalDistribution:
    support: np.ndarray
    counts: np.ndarray
    shots: int
    seed: int

    @property
    def probs(self) -> np.ndarray:
        return self.counts / self.shots


def parse_seed(text: str | int) -> int:
    """Accept an int, or a decimal or 0x-prefixed hex string; must fit in 64 bits."""
    seed = text if isinstance(text, int) else int(str(text).strip(), 0)
    if not 0 <= seed <= _MASK64:
        raise ValueError(f"seed {text!r} is not a 64-bit unsigned integer")
    return seed


def uniforms(seed: int, start: int, count: int, stream: int = 0) -> np.ndarray:
    """(count, 2) uniforms in [0, 1) for shots start .. start + count - 1."""
    key = (seed & _MASK64) | ((stream & _MASK64) << 64)
    bitgen = np.random.Philox(key=key, counter=start)
    raw = bitgen.random_raw(_WORDS_PER_SHOT * count).reshape(count, _WORDS_PER_SHOT)
    return (raw[:, :2] >> np.uint64(11)).astype(np.float64) * 2.0**-53


def _cdf(p: np.ndarray) -> np.ndarray:
    p = np.clip(p, 0.0, None)
    cdf = np.cumsum(p)
    # rounding must never send a draw to a trailing zero-probability outcome
    cdf[np.flatnonzero(p > 0)[-1]:] = 1.0
    return cdf


def _inverse_cdf(cdf: np.ndarray, u: np.ndarray) -> np.ndarray:
    idx = np.searchsorted(cdf, u, side="right")
    return np.minimum(idx, len(cdf) - 1)


def _draw(tm: TransitionMatrix, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    initial = _inverse_cdf(_cdf(tm.initial_probs), u[:, 0])
    final = np.empty_like(initial)
    for n in np.unique(initial):
        sel = initial == n
        final[sel] = _inverse_cdf(_cdf(tm.probs[:, n]), u[sel, 1])
    return initial, final


def sample_transitions(
    tm: TransitionMatrix, shots: int, seed: int, stream: int = 0,
    chunk: int = 1 << 16, workers: int = 1,
) -> ShotRecords:
    if shots < 1:
        raise ValueError("shots must be >= 1")
    seed = parse_seed(seed)
    starts = list(range(0, shots, chunk))

    def run(start):
        count = min(chunk, shots - start)
        return _draw(tm, uniforms(seed, start, count, stream))

    if workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(run, starts))
    else:
        parts = [run(s) for s in starts]
    initial = np.concatenate([p[0] for p in parts])
    final = np.concatenate([p[1] for p in parts])
    delta = tm.values[final] - tm.values[initial]
    return ShotRecords(initial, final, delta, seed)


def sample_protocol(rho, o, u_tau, shots: int, seed, *, stream: int = 0,
                    cluster_tol=None, workers: int = 1) -> ShotRecords:
    """Repeat prepare / measure O / evolve with U_tau / measure O ``shots`` times."""
    projs = _projectors_for(o, cluster_tol)
    tm = transition_matrix(rho, projs, u_tau)
    return sample_transitions(tm, shots, seed, stream=stream, workers=workers)


def empirical_distribution(records: ShotRecords, merge_tol: float = 1e-9) -> EmpiricalDistribution:
    if len(records) == 0:
        raise ValueError("no shot records")
    support, counts = _merge(
        np.asarray(records.delta_o, dtype=float), np.ones(len(records), dtype=np.int64), merge_tol
    )
    return EmpiricalDistribution(support, counts, len(records), records.seed)


def empirical_characteristic(records: ShotRecords, u: float) -> tuple[complex, float]:
    """Sample mean of exp(-i u Delta O) and its standard error.

    The error is sqrt((var(Re) + var(Im)) / N) with sample variances, which
    bounds the error of the modulus as well as of each component.
    """
    n = len(records)
    if n == 0:
        raise ValueError("no shot records")
    if u == 0:
        return complex(1.0, 0.0), 0.0
    phase = -u * np.asarray(records.delta_o)
    re, im = np.cos(phase), np.sin(phase)
    value = complex(re.mean(), im.mean())
    ddof = 1 if n > 1 else 0
    err = np.sqrt((re.var(ddof=ddof) + im.var(ddof=ddof)) / n)
    return value, float(err)


def total_variation_distance(emp, exact: OutcomeDistribution) -> float:
    """Half the L1 distance between two distributions on the merged union support."""
    tol = exact.merge_tol
    values = np.concatenate([emp.support, exact.support])
    weights = np.concatenate([emp.probs, -exact.probs])
    _, diff = _merge(values, weights, tol)
    return float(0.5 * np.abs(diff).sum())
