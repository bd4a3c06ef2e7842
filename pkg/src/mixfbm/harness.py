"""
Monte Carlo experiments: consistency and rate of the drift estimator as the
noise level eps shrinks.

Replication r draws its noise from the stream (seed, r) and reuses it for
every eps (common random numbers). The kernel family, the sampler
factorization and the smoothers are built once per experiment and shared
read-only by all replications. Results are collected in replication order, so
the output does not depend on how many worker threads ran.
"""

from __future__ import annotations

import configparser
import csv
import io
import json
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, MixFBMError
from .estimator import EstimatorSpec, KernelSpec, QEstimate, Smoother, rate_exponent, sup_risk
from .fredholm import build_family
from .paths import SAMPLER_METHODS, GridPath, Role, TimeGrid, get_sampler, stream, validate_hurst
from .sde import Lemma31Report, ModelSpec, ThetaSpec, lemma31_report, limit_ode, simulate_X
from .transform import QKind, QPath, drift_target, kernel_transform

log = logging.getLogger(__name__)

DEFAULT_SLOPE_BAND = (0.8, 1.5)


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in str(text).replace(",", " ").split())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything that defines one experiment.

    Stored on disk as an INI file with ``[model]``, ``[estimator]`` and
    ``[experiment]`` sections; see ``configs/default.ini``.
    """

    # model
    theta_form: str = "sine"
    theta_params: tuple[float, ...] = (0.5, 0.2, 2 * math.pi)
    L: float | None = None
    gamma: float = 1.0
    x0: float = 1.0
    H: float = 0.7
    T: float = 1.0
    n: int = 512
    # estimator
    kernel: str = "epanechnikov"
    h_const: float = 1.0
    eval_policy: str = "interior_only"
    # experiment
    eps_list: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    replications: int = 200
    seed: int = 2018
    method: str = "spectral_fast"
    scheme: str = "exact_linear"
    slope_band: tuple[float, float] = DEFAULT_SLOPE_BAND

    def __post_init__(self):
        try:
            object.__setattr__(self, "theta_params", tuple(float(p) for p in self.theta_params))
            object.__setattr__(self, "eps_list", tuple(float(e) for e in self.eps_list))
            object.__setattr__(self, "slope_band", tuple(float(b) for b in self.slope_band))
            self.validate()
        except ConfigError:
            raise
        except (ValueError, TypeError) as exc:
            raise ConfigError(str(exc)) from exc

    def validate(self) -> None:
        if not self.eps_list:
            raise ConfigError("eps_list is empty")
        if any(e < 0 for e in self.eps_list):
            raise ConfigError("eps values must be nonnegative")
        if any(b >= a for a, b in zip(self.eps_list, self.eps_list[1:])):
            raise ConfigError(f"eps_list must be strictly decreasing, got {self.eps_list}")
        if self.replications < 2:
            raise ConfigError("replications must be >= 2")
        if self.method not in SAMPLER_METHODS:
            raise ConfigError(f"unknown sampler method {self.method!r}")
        if self.scheme not in ("exact_linear", "euler"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if len(self.slope_band) != 2 or self.slope_band[0] >= self.slope_band[1]:
            raise ConfigError("slope_band must be two increasing numbers")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")
        # component invariants
        self.model()
        self.estimator()

    def grid(self) -> TimeGrid:
        return TimeGrid(self.T, self.n)

    def theta(self) -> ThetaSpec:
        if self.theta_form == "tabulated":
            raise ConfigError("tabulated theta cannot be given in a config file")
        L = self.L
        if L is None and self.theta_form == "constant":
            L = abs(self.theta_params[0])
        elif L is None and self.theta_form == "sine":
            L = abs(self.theta_params[0]) + abs(self.theta_params[1])
        return ThetaSpec(self.theta_form, self.theta_params, L, self.gamma)

    def model(self, eps: float | None = None) -> ModelSpec:
        eps = self.eps_list[0] if eps is None else eps
        return ModelSpec(self.theta(), self.x0, eps, self.H, self.grid())

    def estimator(self) -> EstimatorSpec:
        return EstimatorSpec(KernelSpec(self.kernel), self.h_const, self.gamma, self.eval_policy)

    # -- serialization ------------------------------------------------------

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "ExperimentConfig":
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp["model"] = {
            "theta": self.theta_form,
            "theta_params": ", ".join(repr(p) for p in self.theta_params),
            "gamma": repr(self.gamma),
            "x0": repr(self.x0),
            "H": repr(self.H),
            "T": repr(self.T),
            "n": str(self.n),
        }
        if self.L is not None:
            cp["model"]["L"] = repr(self.L)
        cp["estimator"] = {"kernel": self.kernel, "h_const": repr(self.h_const),
                           "eval_policy": self.eval_policy}
        cp["experiment"] = {
            "eps_list": ", ".join(repr(e) for e in self.eps_list),
            "replications": str(self.replications),
            "seed": str(self.seed),
            "method": self.method,
            "scheme": self.scheme,
            "slope_band": ", ".join(repr(b) for b in self.slope_band),
        }
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    @classmethod
    def from_ini(cls, text: str) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        try:
            cp.read_string(text)
        except configparser.Error as exc:
            raise ConfigError(f"malformed config: {exc}") from exc
        spec = {
            "model": {"theta": ("theta_form", str), "theta_params": ("theta_params", _floats),
                      "l": ("L", float), "gamma": ("gamma", float), "x0": ("x0", float),
                      "h": ("H", float), "t": ("T", float), "n": ("n", int)},
            "estimator": {"kernel": ("kernel", str), "h_const": ("h_const", float),
                          "eval_policy": ("eval_policy", str)},
            "experiment": {"eps_list": ("eps_list", _floats), "replications": ("replications", int),
                           "seed": ("seed", int), "method": ("method", str),
                           "scheme": ("scheme", str), "slope_band": ("slope_band", _floats)},
        }
        data = {}
        for section in cp.sections():
            if section not in spec:
                raise ConfigError(f"unknown config section [{section}]")
            for key, raw in cp[section].items():
                if key not in spec[section]:
                    raise ConfigError(f"unknown key {key!r} in [{section}]")
                name, conv = spec[section][key]
                try:
                    data[name] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {key} in [{section}]: {raw!r}") from exc
        if data.get("kernel") == "epa":
            data["kernel"] = "epanechnikov"
        return cls.from_dict(data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        return cls.from_ini(text)


# ---------------------------------------------------------------------------
# Replications
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Replication:
    eps: float
    qhat: QEstimate
    qstar: QPath
    lemma31: Lemma31Report
    X: GridPath
    Z: GridPath


class Experiment:
    """Shared, read-only state of one experiment configuration."""

    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.grid = cfg.grid()
        self.H = validate_hurst(cfg.H)
        self.estimator = cfg.estimator()
        self.family = build_family(self.grid, self.H)
        self.sampler = get_sampler(self.grid, self.H, cfg.method, 1e-12)
        self.base_model = cfg.model()
        self.x = limit_ode(self.base_model)
        self.qstar = drift_target(self.x, self.family)
        self.L = self.base_model.L
        self._smoothers: dict[float, Smoother] = {}

    def smoother(self, eps: float) -> Smoother:
        sm = self._smoothers.get(eps)
        if sm is None:
            # eps = 0: the bandwidth rule gives h = 0; use the grid-resolution floor
            h = self.estimator.bandwidth(eps) if eps > 0 else 2 * self.grid.dt
            sm = Smoother(self.family, self.estimator.kernel, h)
            self._smoothers[eps] = sm
        return sm

    def noise(self, rep_index: int) -> GridPath:
        mixed, _, _ = self.sampler.draw(stream(self.cfg.seed, rep_index))
        return mixed

    def replicate(self, rep_index: int, eps_list: Sequence[float]) -> list[Replication]:
        """One noise draw, processed at every eps in ``eps_list``."""
        mixed = self.noise(rep_index)
        out = []
        for eps in eps_list:
            try:
                model = self.base_model.with_eps(eps)
                X = simulate_X(model, mixed, self.cfg.scheme)
                Z = GridPath(self.grid, kernel_transform(X.increments(), self.family), Role.TRANSFORM_Z)
                sm = self.smoother(eps)
                values, boundary, h = sm.apply(Z.increments()), ~sm.interior, sm.h
                qhat = QEstimate(QPath(self.grid, values, QKind.ESTIMATE_QHAT), boundary, h)
                lemma = lemma31_report(X, self.x, mixed, self.L, eps, self.H)
            except MixFBMError as exc:
                raise MixFBMError(f"replication {rep_index}, eps={eps}: {exc}") from exc
            out.append(Replication(eps, qhat, self.qstar, lemma, X, Z))
        return out


def run_replication(cfg: ExperimentConfig, eps: float, rep_index: int,
                    experiment: Experiment | None = None) -> Replication:
    """Q-hat, Q* and the small-noise bound report for one replication at one eps."""
    experiment = experiment or Experiment(cfg)
    return experiment.replicate(rep_index, [eps])[0]


# ---------------------------------------------------------------------------
# Rate experiment
# ---------------------------------------------------------------------------


def fit_loglog_slope(eps_list: Sequence[float], risks: Sequence[float]) -> float:
    """Least-squares slope of log(risk) against log(eps)."""
    eps = np.asarray(eps_list, dtype=float)
    risks = np.asarray(risks, dtype=float)
    if len(eps) != len(risks):
        raise ValueError("eps_list and risks differ in length")
    if len(eps) < 3:
        raise ValueError("slope fit needs at least 3 points")
    if np.any(risks <= 0) or np.any(eps <= 0):
        raise ValueError("risks and eps must be positive for a log-log fit")
    x, y = np.log(eps), np.log(risks)
    xc = x - x.mean()
    return float(xc @ (y - y.mean()) / (xc @ xc))


@dataclass
class RateReport:
    eps: list[float]
    bandwidth: list[float]
    sup_risk: list[float]
    se: list[float]
    argmax_t: list[float]
    n_interior: list[int]
    lemma31_pathwise_fraction: list[float]
    lemma31_max_second_moment: list[float]
    lemma31_moment_bound: list[float]
    slope: float | None
    theory_exponent: float
    slope_band: list[float]
    monotone: bool | None
    checks: dict[str, bool]
    passed: bool
    runtime_s: float
    config: dict
    risk_curves: list[list[float]] = field(default_factory=list, repr=False)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "RateReport":
        return cls(**json.loads(text))

    def rate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["eps", "h", "sup_risk", "se", "argmax_t", "n_interior",
                    "lemma31_pathwise_fraction", "max_second_moment", "moment_bound"])
        for row in zip(self.eps, self.bandwidth, self.sup_risk, self.se, self.argmax_t,
                       self.n_interior, self.lemma31_pathwise_fraction,
                       self.lemma31_max_second_moment, self.lemma31_moment_bound):
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        return buf.getvalue()

    def curves_csv(self, t: np.ndarray) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t"] + [f"risk_eps_{e!r}" for e in self.eps])
        for i, ti in enumerate(t):
            w.writerow([repr(float(ti))] + ["" if c[i] is None else repr(c[i]) for c in self.risk_curves])
        return buf.getvalue()

    def summary(self) -> str:
        lines = ["rate experiment", "===============", ""]
        lines.append(f"{'eps':>10} {'h':>10} {'sup_risk':>12} {'se':>10} {'argmax_t':>9}")
        for e, h, r, s, a in zip(self.eps, self.bandwidth, self.sup_risk, self.se, self.argmax_t):
            lines.append(f"{e:10.4g} {h:10.4g} {r:12.5g} {s:10.3g} {a:9.4f}")
        lines.append("")
        if self.slope is None:
            lines.append("log-log slope: not fitted (needs >= 3 eps values)")
        else:
            lines.append(f"log-log slope: {self.slope:.4f}")
        lines.append(f"theoretical exponent 8g/(4g+3): {self.theory_exponent:.4f}")
        lines.append(f"slope band: [{self.slope_band[0]}, {self.slope_band[1]}]")
        for name, ok in self.checks.items():
            lines.append(f"check {name}: {'PASS' if ok else 'FAIL'}")
        lines.append(f"overall: {'PASS' if self.passed else 'FAIL'}")
        lines.append(f"runtime: {self.runtime_s:.2f} s")
        return "\n".join(lines) + "\n"


def run_rate_experiment(cfg: ExperimentConfig, jobs: int = 1,
                        experiment: Experiment | None = None) -> RateReport:
    """Sup-risk per eps with common random numbers, then the log-log slope."""
    start = time.perf_counter()
    exp = experiment or Experiment(cfg)
    eps_list = list(cfg.eps_list)
    for eps in eps_list:
        exp.smoother(eps)  # built before threads start

    def work(r):
        return [(rep.qhat, rep.lemma31, rep.X.values) for rep in exp.replicate(r, eps_list)]

    reps = range(cfg.replications)
    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(work, reps))
    else:
        results = [work(r) for r in reps]

    x = exp.x.values
    out = {k: [] for k in ("bw", "risk", "se", "arg", "nint", "frac", "m2", "mb", "curves")}
    for k, eps in enumerate(eps_list):
        estimates = [res[k][0] for res in results]
        summary = sup_risk(estimates, exp.qstar, cfg.eval_policy)
        lemmas = [res[k][1] for res in results]
        dev = np.stack([res[k][2] for res in results]) - x[None, :]
        out["bw"].append(float(estimates[0].h))
        out["risk"].append(summary.sup_risk)
        out["se"].append(summary.se)
        out["arg"].append(summary.argmax_t)
        out["nint"].append(summary.n_points)
        out["frac"].append(float(np.mean([lm.pathwise_ok for lm in lemmas])))
        out["m2"].append(float((dev**2).mean(axis=0).max()))
        out["mb"].append(lemmas[0].moment_bound)
        out["curves"].append([None if math.isnan(v) else float(v) for v in summary.curve])
        log.info("eps=%g h=%.4g sup_risk=%.5g (se %.2g)", eps, estimates[0].h, summary.sup_risk, summary.se)

    slope = None
    if len(eps_list) >= 3 and all(r > 0 for r in out["risk"]):
        slope = fit_loglog_slope(eps_list, out["risk"])
    monotone = None
    if len(eps_list) >= 2:
        monotone = all(b < a for a, b in zip(out["risk"], out["risk"][1:]))
    checks = {}
    if monotone is not None:
        checks["risk_monotone"] = monotone
    if slope is not None:
        checks["slope_in_band"] = cfg.slope_band[0] <= slope <= cfg.slope_band[1]
    return RateReport(
        eps=eps_list,
        bandwidth=out["bw"],
        sup_risk=out["risk"],
        se=out["se"],
        argmax_t=out["arg"],
        n_interior=out["nint"],
        lemma31_pathwise_fraction=out["frac"],
        lemma31_max_second_moment=out["m2"],
        lemma31_moment_bound=out["mb"],
        slope=slope,
        theory_exponent=rate_exponent(cfg.gamma),
        slope_band=list(cfg.slope_band),
        monotone=monotone,
        checks=checks,
        passed=all(checks.values()),
        runtime_s=time.perf_counter() - start,
        config=json.loads(json.dumps(cfg.to_dict())),
        risk_curves=out["curves"],
    )


def write_rate_outputs(report: RateReport, grid: TimeGrid, out_dir) -> Path:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "rate.csv").write_text(report.rate_csv())
    (out / "risk_curves.csv").write_text(report.curves_csv(grid.points))
    (out / "report.json").write_text(report.to_json())
    (out / "report.txt").write_text(report.summary())
    return out
