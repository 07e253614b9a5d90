"""Size and power experiments over a grid of nominal levels.

Replication ``i`` reads its randomness from streams ``(seed, i*8 + role)``
(roles: data, proxy, multiplier, injection), so results do not depend on how
replications are spread across workers. BLAS is pinned to one thread inside
replications for the same reason.
"""

from __future__ import annotations

import json
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from typing import Callable

import numpy as np
from threadpoolctl import threadpool_limits

from . import __version__, estimators, hdtest
from .diagnostics import AltSpec, make_alternative
from .errors import ConfigError, HdlpbootError
from .numcore import psd_factor
from .randgen import DgpKind, RngStream, draw_rows

ROLES_PER_REP = 8
ROLE_DATA, ROLE_PROXY, ROLE_MULT, ROLE_ALT, ROLE_INJECT = 0, 1, 2, 3, 4

DGPS = {
    "equicorr": DgpKind("copula", "equicorr"),
    "toeplitz": DgpKind("copula", "toeplitz"),
    "banded": DgpKind("copula", "banded"),
    "t4toeplitz": DgpKind("t4", "toeplitz"),
    "gaussian": DgpKind("gaussian", "identity"),
}

GRID99 = tuple(round(0.01 * k, 2) for k in range(1, 100))


# ---------------------------------------------------------------------------
# covariance structures
# ---------------------------------------------------------------------------


def _band_width(d: int) -> int:
    return math.ceil(np.cbrt(d) / 2.0)


def true_bandwidth(d: int) -> int:
    """Largest lag with a nonzero entry in the banded structure."""
    return _band_width(d) - 1


def build_cov(kind: str, d: int) -> np.ndarray:
    if d < 1:
        raise ConfigError("d must be at least 1")
    lag = np.abs(np.subtract.outer(np.arange(d), np.arange(d))).astype(float)
    if kind == "equicorr":
        return 0.8 + 0.2 * np.eye(d)
    if kind == "toeplitz":
        return 0.8 ** lag
    if kind == "banded":
        return np.maximum(1.0 - lag / _band_width(d), 0.0)
    if kind == "identity":
        return np.eye(d)
    raise ConfigError(f"unknown covariance kind {kind!r}")


# ---------------------------------------------------------------------------
# config
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class StatSpec:
    kind: str  # lp, w, v, student, postsel
    p: object = None
    bsel: int | None = None

    @classmethod
    def parse(cls, text: str) -> "StatSpec":
        key = text.strip().lower()
        simple = {"l2": ("lp", 2.0), "linf": ("lp", math.inf), "logt": ("lp", "logt"),
                  "student-l2": ("student", 2.0), "student-linf": ("student", math.inf)}
        if key in simple:
            return cls(*simple[key])
        if key == "w":
            return cls("w", hdtest.COMBINED)
        if key == "v":
            return cls("v", 2.0)
        if key.startswith("postsel:"):
            parts = key.split(":")
            if len(parts) != 3:
                raise ConfigError("postsel needs the form postsel:<p>:<B>")
            try:
                p = _parse_p(parts[1])
                bsel = int(parts[2])
            except ValueError:
                raise ConfigError(f"bad postsel spec {text!r}") from None
            return cls("postsel", p, bsel)
        raise ConfigError(f"unknown statistic {text!r}")


def _parse_p(text: str):
    t = text.strip().lower()
    if t in ("inf", "linf"):
        return math.inf
    if t in ("logt", "log"):
        return "logt"
    p = float(t)
    if not p >= 1:
        raise ValueError("p must be >= 1")
    return p


@dataclass(frozen=True)
class MethodSpec:
    kind: str  # gaussian, spherical, multiplier
    s: int | None = None

    @classmethod
    def parse(cls, text: str) -> "MethodSpec":
        key = text.strip().lower()
        if key in ("gaussian", "multiplier", "spherical"):
            return cls(key)
        if key.startswith("spherical:"):
            try:
                s = int(key.split(":", 1)[1])
            except ValueError:
                raise ConfigError(f"bad spherical spec {text!r}") from None
            if s < 2:
                raise ConfigError("spherical s must be at least 2")
            return cls("spherical", s)
        raise ConfigError(f"unknown method {text!r}")


@dataclass(frozen=True)
class CovSpec:
    kind: str  # naive, threshold, band
    param: float | None = None

    @classmethod
    def parse(cls, text: str) -> "CovSpec":
        key = text.strip().lower()
        head, _, tail = key.partition(":")
        if head not in ("naive", "threshold", "band"):
            raise ConfigError(f"unknown covariance estimator {text!r}")
        if not tail:
            return cls(head)
        if head == "naive":
            raise ConfigError("naive covariance takes no parameter")
        try:
            val = float(tail) if head == "threshold" else int(tail)
        except ValueError:
            raise ConfigError(f"bad covariance parameter in {text!r}") from None
        if val < 0:
            raise ConfigError("covariance parameter must be nonnegative")
        return cls(head, val)


def parse_alpha(value) -> tuple[float, ...]:
    if isinstance(value, str):
        if value.strip().lower() == "grid99":
            return GRID99
        try:
            value = [float(a) for a in value.split(",") if a.strip()]
        except ValueError:
            raise ConfigError(f"bad alpha list {value!r}") from None
    out = tuple(sorted(float(a) for a in value))
    if not out:
        raise ConfigError("alpha grid is empty")
    if len(set(out)) != len(out):
        raise ConfigError("alpha grid has duplicates")
    return out


def parse_alt(value) -> AltSpec | None:
    if value is None or value == "":
        return None
    if isinstance(value, AltSpec):
        return value
    parts = str(value).split(":")
    if len(parts) not in (2, 3):
        raise ConfigError("alt needs the form s:delta[:seed]")
    try:
        s, delta = int(parts[0]), float(parts[1])
        seed = int(parts[2]) if len(parts) == 3 else None
    except ValueError:
        raise ConfigError(f"bad alt spec {value!r}") from None
    try:
        spec = AltSpec(s, delta, "first" if seed is None else "random")
    except HdlpbootError as exc:
        raise ConfigError(str(exc)) from None
    return spec if seed is None else _SeededAlt(spec, seed)


@dataclass(frozen=True)
class _SeededAlt:
    spec: AltSpec
    seed: int


@dataclass(frozen=True)
class SimConfig:
    """One experiment. String fields use the CLI syntax; ``cov=None`` picks the DGP default."""

    dgp: str = "toeplitz"
    d: int = 100
    n: int = 100
    B: int = 2000
    reps: int = 1000
    stat: str = "l2"
    method: str = "spherical"
    cov: str | None = None
    alpha: tuple = GRID99
    alt: str | None = None
    seed: int = 0
    workers: int | None = None

    def __post_init__(self):
        object.__setattr__(self, "alpha", parse_alpha(self.alpha))
        self.validate()

    # parsed views
    @property
    def dgp_kind(self) -> DgpKind:
        return DGPS[self.dgp]

    @property
    def stat_spec(self) -> StatSpec:
        return StatSpec.parse(self.stat)

    @property
    def method_spec(self) -> MethodSpec:
        return MethodSpec.parse(self.method)

    @property
    def cov_spec(self) -> CovSpec:
        if self.cov is None:
            return CovSpec("band") if self.dgp == "banded" else CovSpec("naive")
        return CovSpec.parse(self.cov)

    @property
    def alt_spec(self):
        return parse_alt(self.alt)

    def validate(self) -> None:
        if self.dgp not in DGPS:
            raise ConfigError(f"unknown dgp {self.dgp!r}; choose from {sorted(DGPS)}")
        for name in ("d", "n", "B", "reps"):
            v = getattr(self, name)
            if not isinstance(v, (int, np.integer)) or isinstance(v, bool):
                raise ConfigError(f"{name} must be an integer")
        if self.d < 1 or self.reps < 1 or self.B < 1:
            raise ConfigError("d, B and reps must be positive")
        if self.n < 2:
            raise ConfigError("n must be at least 2")
        if self.workers is not None and self.workers < 1:
            raise ConfigError("workers must be positive")
        st, me, cv = self.stat_spec, self.method_spec, self.cov_spec
        if st.kind == "w" and self.d < 2:
            raise ConfigError("statistic w needs d >= 2")
        if st.kind == "postsel" and not 1 <= st.bsel <= self.d:
            raise ConfigError(f"postsel size must lie in 1..{self.d}")
        if st.kind == "v" and (cv.kind != "naive" or me.kind == "multiplier"):
            raise ConfigError("statistic v uses its own covariance with the gaussian or spherical proxy")
        if me.kind == "multiplier" and cv.kind != "naive":
            raise ConfigError("the multiplier proxy implies the naive covariance")
        alt = self.alt_spec
        if alt is not None:
            s = alt.spec.s if isinstance(alt, _SeededAlt) else alt.s
            if s > self.d:
                raise ConfigError(f"alternative sparsity {s} exceeds d={self.d}")
        for a in self.alpha:
            try:
                hdtest.order_index(a, self.B)
            except HdlpbootError as exc:
                raise ConfigError(str(exc)) from None

    def canonical(self) -> dict:
        """Config echo; ``workers`` is left out since it cannot change results."""
        out = {f.name: getattr(self, f.name) for f in fields(self) if f.name != "workers"}
        out["alpha"] = list(self.alpha)
        return out

    def canonical_json(self) -> str:
        return json.dumps(self.canonical(), sort_keys=True, separators=(",", ":"))

    @classmethod
    def from_dict(cls, data: dict) -> "SimConfig":
        known = {f.name for f in fields(cls)}
        extra = set(data) - known
        if extra:
            raise ConfigError(f"unknown config keys: {sorted(extra)}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------------------
# results
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class SizeCurve:
    alphas: tuple
    reject_count: tuple
    reps: int
    config: dict
    p_values: np.ndarray = field(repr=False, compare=False, default=None)
    wall_time: float = field(compare=False, default=0.0)
    version: str = __version__

    @property
    def alpha_actual(self) -> np.ndarray:
        return np.asarray(self.reject_count, dtype=float) / self.reps

    @property
    def mc_se(self) -> np.ndarray:
        a = self.alpha_actual
        return np.sqrt(a * (1.0 - a) / self.reps)

    def at(self, alpha: float) -> float:
        i = int(np.argmin(np.abs(np.asarray(self.alphas) - alpha)))
        if abs(self.alphas[i] - alpha) > 1e-12:
            raise KeyError(f"alpha {alpha} is not on the grid")
        return float(self.alpha_actual[i])

    def rows(self):
        for a, act, se, k in zip(self.alphas, self.alpha_actual, self.mc_se, self.reject_count):
            yield a, float(act), float(se), self.reps, int(k)

    def to_csv(self) -> str:
        cfg = json.dumps(self.config, sort_keys=True, separators=(",", ":"))
        lines = [f"# hdlpboot v{self.version} config={cfg}",
                 "alpha_nominal,alpha_actual,mc_se,reps,reject_count"]
        for a, act, se, reps, k in self.rows():
            lines.append(f"{a:.17g},{act:.17g},{se:.17g},{reps},{k}")
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        body = {
            "version": self.version,
            "config": self.config,
            "wall_time": self.wall_time,
            "rows": [dict(zip(("alpha_nominal", "alpha_actual", "mc_se", "reps", "reject_count"), r))
                     for r in self.rows()],
        }
        return json.dumps(body, indent=2, sort_keys=True)


# ---------------------------------------------------------------------------
# replications
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class _Plan:
    cfg: SimConfig
    factor: np.ndarray
    mu: np.ndarray | None
    inject: Callable | None = None


def _make_plan(cfg: SimConfig, inject=None) -> _Plan:
    kind = cfg.dgp_kind
    Sigma = build_cov(kind.cov, cfg.d)
    factor = psd_factor(Sigma)
    mu = None
    alt = cfg.alt_spec
    if alt is not None:
        if isinstance(alt, _SeededAlt):
            mu = make_alternative(alt.spec, np.diag(Sigma), stream=RngStream(alt.seed, ROLE_ALT))
        else:
            mu = make_alternative(alt, np.diag(Sigma))
    return _Plan(cfg, factor, mu, inject)


def _stream(cfg: SimConfig, rep: int, role: int) -> RngStream:
    return RngStream(cfg.seed, rep * ROLES_PER_REP + role)


def _cov_estimate(spec: CovSpec, X: np.ndarray, d: int) -> estimators.CovModel:
    if spec.kind == "naive":
        return estimators.sample_cov_transformed(X)
    if spec.kind == "threshold":
        return estimators.thresholded_cov(X, lam=spec.param)
    k = true_bandwidth(d) if spec.param is None else int(spec.param)
    return estimators.banded_cov(X, k)


def _replicate(plan: _Plan, rep: int) -> tuple[np.ndarray, float]:
    cfg = plan.cfg
    st, me = cfg.stat_spec, cfg.method_spec
    X = draw_rows(cfg.dgp_kind, plan.factor, _stream(cfg, rep, ROLE_DATA), cfg.n)
    if plan.mu is not None:
        X = X + plan.mu
    proxy_p = st.p
    cov = None
    data = X
    if st.kind == "lp":
        stat = hdtest.t_stat(X, p=st.p)
    elif st.kind == "w":
        stat = hdtest.w_stat(X)
    elif st.kind == "postsel":
        stat = hdtest.post_selection_stat(X, st.p, st.bsel)
    elif st.kind == "student":
        data, _ = estimators.studentize(X)
        stat = hdtest.studentized_stat(X, st.p)
    else:
        stat = hdtest.v_stat(X)
        cov = estimators.selfnorm_cov(X, center=plan.mu)
    if me.kind == "multiplier":
        draws = hdtest.multiplier_proxy(data, estimators.IDENTITY, proxy_p, cfg.B,
                                        _stream(cfg, rep, ROLE_MULT))
    else:
        if cov is None:
            cov = _cov_estimate(cfg.cov_spec, data, cfg.d)
        stream = _stream(cfg, rep, ROLE_PROXY)
        if me.kind == "gaussian":
            draws = hdtest.gaussian_proxy(cov, proxy_p, cfg.B, stream)
        else:
            draws = hdtest.spherical_proxy(cov, proxy_p, cfg.B, stream, me.s)
    if plan.inject is not None:
        stat = float(plan.inject(draws.values, _stream(cfg, rep, ROLE_INJECT)))
    rejects = hdtest.reject_grid(stat, draws, cfg.alpha)
    return rejects, hdtest.p_value(stat, draws)


def _run_block(plan: _Plan, lo: int, hi: int) -> tuple[np.ndarray, np.ndarray]:
    with threadpool_limits(limits=1):
        rej = np.zeros((hi - lo, len(plan.cfg.alpha)), dtype=bool)
        pv = np.zeros(hi - lo)
        for i, rep in enumerate(range(lo, hi)):
            rej[i], pv[i] = _replicate(plan, rep)
    return rej, pv


def resolve_workers(workers: int | None) -> int:
    if workers is not None:
        return int(workers)
    env = os.environ.get("HDLPBOOT_WORKERS")
    if env:
        try:
            w = int(env)
        except ValueError:
            raise ConfigError(f"HDLPBOOT_WORKERS must be an integer, got {env!r}") from None
        if w < 1:
            raise ConfigError("HDLPBOOT_WORKERS must be positive")
        return w
    return 1


def _execute(plan: _Plan) -> SizeCurve:
    cfg = plan.cfg
    workers = resolve_workers(cfg.workers)
    t0 = time.perf_counter()
    if workers == 1 or cfg.reps == 1:
        rej, pv = _run_block(plan, 0, cfg.reps)
    else:
        nblocks = min(cfg.reps, 4 * workers)
        edges = np.linspace(0, cfg.reps, nblocks + 1).astype(int)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_run_block, plan, int(lo), int(hi))
                    for lo, hi in zip(edges[:-1], edges[1:]) if hi > lo]
            parts = [f.result() for f in futs]
        rej = np.vstack([p[0] for p in parts])
        pv = np.concatenate([p[1] for p in parts])
    counts = tuple(int(c) for c in rej.sum(axis=0))
    return SizeCurve(cfg.alpha, counts, cfg.reps, cfg.canonical(), pv,
                     time.perf_counter() - t0)


def run_size_experiment(cfg: SimConfig, inject: Callable | None = None) -> SizeCurve:
    """Rejection frequencies under H0 (mean zero) for every level on the grid.

    ``inject(draws, stream)`` replaces the statistic; used for calibration checks.
    """
    if cfg.alt_spec is not None:
        raise ConfigError("size experiments must not set an alternative")
    return _execute(_make_plan(cfg, inject))


def run_power_experiment(cfg: SimConfig) -> SizeCurve:
    """Rejection frequencies with data shifted by the configured alternative."""
    if cfg.alt_spec is None:
        raise ConfigError("power experiments need an alternative")
    return _execute(_make_plan(cfg))


def run_experiment(cfg: SimConfig) -> SizeCurve:
    return run_size_experiment(cfg) if cfg.alt_spec is None else run_power_experiment(cfg)


def replace(cfg: SimConfig, **changes) -> SimConfig:
    data = asdict(cfg)
    data.update(changes)
    return SimConfig(**data)
