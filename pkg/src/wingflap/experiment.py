"""Configured tau sweeps of the wing-flap quench and their tabular output."""

from __future__ import annotations

import csv
import io
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .sampler import (
    empirical_characteristic,
    empirical_distribution,
    parse_seed,
    sample_transitions,
    total_variation_distance,
)
from .scrambling import evolve_in_eigenbasis
from .spectral import eig_hermitian, operator_exponential, spectral_projectors, thermal_state
from .spin import (
    ChainSpec,
    SpinOperator,
    build_h0,
    build_h1,
    build_h2,
    build_wingflap,
    commutator,
    embed_local,
    pauli,
)
from .tpm import (
    characteristic_function,
    default_merge_tol,
    distribution_from_transitions,
    jarzynski_check,
    linear_response_gap,
    moments,
    transitions_in_eigenbasis,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

MODELS = ("integrable", "ergodic", "custom")
CONVENTIONS = ("forward_tau", "midpoint_tau_half")

EXACT_COLUMNS = [
    "tau",
    "re_F",
    "im_F",
    "C",
    "mean_w",
    "second_moment_w",
    "variance_w",
    "rel_entropy",
    "dissipation_gap",
    "jarzynski",
    "pinsker_slack",
    "linear_response_gap",
    "square_commutator",
    "otoc_gap",
    "commutator_gap",
    "mean_q",
]
SAMPLED_COLUMNS = ["emp_re_G", "emp_im_G", "emp_std_error", "tvd"]

IDENTITY_TOL = {
    "otoc_gap": 1e-9,
    "commutator_gap": 1e-9,
    "dissipation_gap": 1e-9,
    "jarzynski": 1e-9,
    "pinsker_slack": 1e-10,
}

DEFAULT_TAU_GRID = (0.0, 12.0, 120)


class ConfigError(ValueError):
    def __init__(self, field_name: str, message: str):
        super().__init__(f"{field_name}: {message}")
        self.field = field_name


@dataclass(frozen=True)
class ExperimentConfig:
    model: str
    tau_grid: tuple[float, float, int]
    L: int = 9
    g: float = 0.90450849
    J: float = 1.0
    h: float = 0.8090169
    site: int = 5
    theta: float = math.pi / 2
    beta: float = 0.1
    u: float = 1.0
    flap_time_convention: str = "midpoint_tau_half"
    shots: int | None = None
    seed: int | None = None
    outputs: tuple[str, ...] = ()
    workers: int = 1
    name: str = "custom"

    def __post_init__(self):
        if self.model not in MODELS:
            raise ConfigError("model", f"must be one of {MODELS}, got {self.model!r}")
        if self.flap_time_convention not in CONVENTIONS:
            raise ConfigError(
                "flap_time_convention", f"must be one of {CONVENTIONS}, got {self.flap_time_convention!r}"
            )
        try:
            start, stop, points = self.tau_grid
        except (TypeError, ValueError):
            raise ConfigError("tau_grid", "expected [start, stop, points]") from None
        if int(points) != points or points < 2:
            raise ConfigError("tau_grid", "points must be an integer >= 2")
        if not stop > start:
            raise ConfigError("tau_grid", "stop must exceed start")
        object.__setattr__(self, "tau_grid", (float(start), float(stop), int(points)))
        if not (math.isfinite(self.beta) and self.beta >= 0):
            raise ConfigError("beta", "must be finite and >= 0")
        if self.model != "custom" and self.L < 2:
            raise ConfigError("L", "the quench models need at least two sites")
        try:
            ChainSpec(self.L, self.g, self.J, self.h, self.site, self.theta)
        except ValueError as exc:
            name = "site" if "site" in str(exc) else "L"
            raise ConfigError(name, str(exc)) from None
        if self.shots is not None and self.shots < 1:
            raise ConfigError("shots", "must be >= 1")
        if self.seed is not None:
            try:
                object.__setattr__(self, "seed", parse_seed(self.seed))
            except ValueError as exc:
                raise ConfigError("seed", str(exc)) from None
        if self.shots is not None and self.seed is None:
            object.__setattr__(self, "seed", 0)
        known = set(EXACT_COLUMNS) | set(SAMPLED_COLUMNS)
        bad = [o for o in self.outputs if o not in known]
        if bad:
            raise ConfigError("outputs", f"unknown quantities {bad}")
        object.__setattr__(self, "outputs", tuple(self.outputs))
        if self.workers < 1:
            raise ConfigError("workers", "must be >= 1")

    @property
    def chain(self) -> ChainSpec:
        return ChainSpec(self.L, self.g, self.J, self.h, self.site, self.theta)

    def taus(self) -> np.ndarray:
        start, stop, points = self.tau_grid
        return np.linspace(start, stop, points)

    def columns(self) -> list[str]:
        available = EXACT_COLUMNS + (SAMPLED_COLUMNS if self.shots else [])
        if not self.outputs:
            return available
        wanted = set(self.outputs) | {"tau"}
        return [c for c in available if c in wanted]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["tau_grid"] = list(self.tau_grid)
        d["outputs"] = list(self.outputs)
        return d


PRESETS = {
    "fig2-integrable": dict(model="integrable", tau_grid=DEFAULT_TAU_GRID, name="fig2-integrable"),
    "fig2-ergodic": dict(model="ergodic", tau_grid=DEFAULT_TAU_GRID, name="fig2-ergodic"),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    if name not in PRESETS:
        raise ConfigError("preset", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    return ExperimentConfig(**{**PRESETS[name], **overrides})


def config_from_mapping(data: dict, name: str = "custom") -> ExperimentConfig:
    allowed = {f.name for f in fields(ExperimentConfig)}
    unknown = sorted(set(data) - allowed)
    if unknown:
        raise ConfigError(unknown[0], "unknown configuration key")
    for required in ("model", "tau_grid"):
        if required not in data:
            raise ConfigError(required, "missing required field")
    data = dict(data)
    data.setdefault("name", name)
    if "outputs" in data:
        data["outputs"] = tuple(data["outputs"])
    try:
        return ExperimentConfig(**data)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from None


def load_config(source: str | Path) -> ExperimentConfig:
    """Resolve a preset name or read a flat TOML key-value file."""
    if str(source) in PRESETS:
        return preset(str(source))
    path = Path(source)
    with path.open("rb") as fh:  # OSError propagates: the CLI maps it to an I/O exit
        try:
            data = tomllib.load(fh)
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError("config", f"parse error in {path}: {exc}") from None
    nested = [k for k, v in data.items() if isinstance(v, dict)]
    if nested:
        raise ConfigError(nested[0], "config must be flat key = value pairs")
    return config_from_mapping(data, name=path.stem)


def build_hamiltonian(cfg: ExperimentConfig) -> tuple[SpinOperator, SpinOperator]:
    """(H, H0) for the configured quench. The custom model adds a uniform
    longitudinal field h on every site to the Ising coupling."""
    h0 = build_h0(cfg.L, cfg.g)
    if cfg.model == "integrable":
        hi = build_h1(cfg.L, cfg.J)
    elif cfg.model == "ergodic":
        hi = build_h2(cfg.L, cfg.J, cfg.h)
    else:
        hi = build_h1(cfg.L, cfg.J) if cfg.L >= 2 else SpinOperator(np.zeros((2, 2)), 1)
        z = pauli("z")
        for i in range(1, cfg.L + 1):
            hi = hi + cfg.h * embed_local(z, i, cfg.L)
    return h0 + hi, h0


@dataclass
class SweepResult:
    config: ExperimentConfig
    rows: list[dict] = field(default_factory=list)

    def column(self, name: str) -> np.ndarray:
        return np.array([r[name] for r in self.rows])

    def failures(self) -> list[tuple[float, str, float]]:
        """(tau, column, value) for every identity check out of tolerance."""
        bad = []
        for r in self.rows:
            for col, tol in IDENTITY_TOL.items():
                v = r[col]
                if col == "jarzynski":
                    ok = abs(v - 1.0) <= tol
                elif col == "pinsker_slack":
                    ok = v >= -tol
                else:
                    ok = v <= tol
                if not ok or not math.isfinite(v):
                    bad.append((r["tau"], col, v))
        return bad


def _trace_of_product(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.sum(a * b.T))


class _Sweep:
    """Per-sweep precomputation shared read-only by all grid points."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        h, h0 = build_hamiltonian(cfg)
        self.h0 = np.asarray(h0)
        self.h_dec = eig_hermitian(h)
        h0_dec = eig_hermitian(h0)
        self.projs = spectral_projectors(h0_dec)
        self.merge_tol = default_merge_tol(self.projs)
        self.b = self.projs.basis()
        self.rho = np.asarray(thermal_state(h0_dec, cfg.beta))
        self.rho_eig = self.b.conj().T @ self.rho @ self.b
        lam = h0_dec.eigenvalues
        log_weights = -cfg.beta * (lam - lam[0])
        log_weights -= np.log(np.sum(np.exp(log_weights)))
        self.log_rho = h0_dec.apply(log_weights)
        self.rho_entropy = float(np.sum(np.exp(log_weights) * log_weights))
        w = np.asarray(build_wingflap(cfg.L, cfg.site, cfg.theta))
        vh = self.h_dec.eigenvectors
        self.w_h = vh.conj().T @ w @ vh
        self.v = np.asarray(operator_exponential(h0_dec, cfg.u))

    def forward_time(self, tau: float) -> float:
        return tau / 2 if self.cfg.flap_time_convention == "midpoint_tau_half" else tau

    def row(self, index: int, tau: float) -> dict:
        cfg = self.cfg
        rho, h0, v, b = self.rho, self.h0, self.v, self.b
        wt = evolve_in_eigenbasis(self.w_h, self.h_dec, self.forward_time(tau))
        wt_dag = wt.conj().T

        # direct OTOC and commutator norm, computational basis
        wv = wt @ v
        f = _trace_of_product(rho @ wt_dag, v.conj().T @ wv)
        comm = wv - v @ wt
        c_direct = float(np.sum((comm @ rho) * comm.conj()).real)

        # two-point-measurement statistics, eigenbasis of H0
        tm = transitions_in_eigenbasis(self.rho_eig, b.conj().T @ wt @ b, self.projs)
        dist = distribution_from_transitions(tm, self.merge_tol)
        g = characteristic_function(dist, cfg.u)
        m = moments(dist)

        d = wt_dag @ (h0 @ wt) - h0
        sq_comm = _trace_of_product(rho @ d, d).real

        rho_tau = (wt @ rho) @ wt_dag
        # Tr(rho_tau ln rho_tau) = Tr(rho ln rho) since U_tau is unitary
        s_rel = self.rho_entropy - _trace_of_product(rho_tau, self.log_rho).real
        trace_dist = float(np.sum(np.abs(np.linalg.eigvalsh(rho_tau - rho))))
        diss_gap = abs(m.mean - s_rel / cfg.beta) if cfg.beta > 0 else abs(m.mean)

        row = {
            "tau": float(tau),
            "re_F": f.real,
            "im_F": f.imag,
            "C": c_direct,
            "mean_w": m.mean,
            "second_moment_w": m.second_moment,
            "variance_w": m.variance,
            "rel_entropy": s_rel,
            "dissipation_gap": diss_gap,
            "jarzynski": jarzynski_check(dist, cfg.beta),
            "pinsker_slack": s_rel - 0.5 * trace_dist**2,
            "linear_response_gap": linear_response_gap(m, cfg.beta),
            "square_commutator": sq_comm,
            "otoc_gap": abs(f - g),
            "commutator_gap": abs(m.second_moment - sq_comm),
            "mean_q": m.mean,
        }
        if cfg.shots:
            records = sample_transitions(tm, cfg.shots, cfg.seed, stream=index)
            g_emp, err = empirical_characteristic(records, cfg.u)
            row.update(
                emp_re_G=g_emp.real,
                emp_im_G=g_emp.imag,
                emp_std_error=err,
                tvd=total_variation_distance(empirical_distribution(records, self.merge_tol), dist),
            )
        return row


def run_sweep(cfg: ExperimentConfig, workers: int | None = None) -> SweepResult:
    """Evaluate every exact (and, with shots, sampled) quantity on the tau grid.

    Eigendecompositions of H and H0 happen once; grid points then run in a
    thread pool and are returned in grid order.
    """
    sweep = _Sweep(cfg)
    taus = cfg.taus()
    workers = workers or cfg.workers

    def one(item):
        i, tau = item
        try:
            return sweep.row(i, tau)
        except Exception as exc:
            raise RuntimeError(f"grid point {i} (tau={tau:g}): {exc}") from exc

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, enumerate(taus)))
    else:
        rows = [one(item) for item in enumerate(taus)]
    return SweepResult(cfg, rows)


def to_csv(result: SweepResult) -> str:
    cols = result.config.columns()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(cols)
    for r in result.rows:
        writer.writerow([format(r[c], ".12g") for c in cols])
    return buf.getvalue()


def to_json(result: SweepResult) -> str:
    cols = result.config.columns()
    doc = {
        "metadata": {"version": __version__, "config": result.config.to_dict()},
        "rows": [{c: r[c] for c in cols} for r in result.rows],
    }
    return json.dumps(doc, indent=1) + "\n"


def emit(result: SweepResult, fmt: str = "csv", path: str | Path | None = None) -> str:
    """Render the result as CSV or JSON and write it to ``path`` when given."""
    if fmt == "csv":
        header = "# " + json.dumps({"version": __version__, "config": result.config.to_dict()})
        text = header + "\n" + to_csv(result)
    elif fmt == "json":
        text = to_json(result)
    else:
        raise ValueError(f"unknown format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    return text


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    kw = {k: v for k, v in kw.items() if v is not None}
    return replace(cfg, **kw) if kw else cfg
