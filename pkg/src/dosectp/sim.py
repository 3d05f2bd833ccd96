"""Monte Carlo estimation of per-pair power and size for the four procedures.

Balanced one-way normal data are generated for a fixed set of dose-response
shapes (control plus three doses).  Four procedures are scored per dose:
Dunnett (D), the highest-dose row of the Williams test (W), and the closed
procedures with subset Williams tests (CW) or pairwise top-dose contrasts
(CP).

Two engines share the same data stream.  The default ``"vectorized"``
engine evaluates all replications at once: each procedure rejects exactly
when its statistic reaches the multivariate t critical value at level
``1 - alpha``, and those critical values depend only on the design.  The
``"exact"`` engine runs the full p-value machinery replication by
replication and serves as a cross-check.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
import yaml
from scipy import optimize, stats

from .contrasts import (Design, contrast_correlation, dunnett_contrasts, pairwise_contrast,
                        sub_williams_contrasts, williams_contrasts)
from .ctp import ctp_cp, ctp_cw
from .errors import CalibrationError, DataError, DomainError
from .mct import dunnett_test, fit_groups, williams_test
from .mvt import mvt_quantile_1sided, t_quantile

METHODS = ("D", "W", "CW", "CP")
SIM_TOL = 1e-4
CALIBRATION_SHAPE = "M4"


class ConfigError(DataError):
    """A simulation configuration has an unknown key or an invalid value."""


@dataclass(frozen=True)
class ShapeSpec:
    """Group means as multiples of ``delta``; control mean is 0."""

    name: str
    mu: tuple
    shape_class: str
    description: str = ""
    delta: float = 1.0

    def __post_init__(self):
        if self.mu[0] != 0:
            raise DomainError("the control mean of a shape is 0 by convention")
        if self.shape_class not in ("null", "monotone", "downturn"):
            raise DomainError(f"unknown shape class {self.shape_class!r}")

    @property
    def means(self):
        return np.asarray(self.mu, dtype=float) * self.delta

    @property
    def k(self):
        return len(self.mu) - 1


_SHAPES = (
    ("H0", (0, 0, 0, 0), "null", "mu0=mu1=mu2=mu3"),
    ("M1", (0, 1, 3, 3), "monotone", "mu0<mu1=d<mu2=mu3=3d"),
    ("M2", (0, 2, 3, 3), "monotone", "mu0<mu1=2d<mu2=mu3=3d"),
    ("M3", (0, 0, 0, 3), "monotone", "mu0=mu1=mu2<mu3=3d"),
    ("M4", (0, 3, 3, 3), "monotone", "mu0<mu1=mu2=mu3=3d"),
    ("M5", (0, 0, 3, 3), "monotone", "mu0=mu1<mu2=mu3=3d"),
    ("M6", (0, 1, 2, 3), "monotone", "mu0<mu1=d<mu2=2d<mu3=3d"),
    ("N1", (0, 0, 3, 2), "downturn", "mu0=mu1<mu2=3d>mu3=2d"),
    ("N2", (0, 0, 3, 1), "downturn", "mu0=mu1<mu2=3d>mu3=d"),
)


def table1_shapes(delta=1.0):
    """The null shape, six monotone shapes and two downturn shapes."""
    if not delta > 0:
        raise DomainError(f"delta must be positive, got {delta}")
    return [ShapeSpec(name, mu, cls, desc, float(delta)) for name, mu, cls, desc in _SHAPES]


@dataclass(frozen=True)
class SimConfig:
    """Settings of a power study.

    ``delta=None`` means the effect unit is calibrated so that Dunnett's
    power for the highest dose in shape ``M4`` equals ``target_power``.
    """

    n_per_group: int = 10
    sigma: float = 1.0
    delta: float = None
    alpha: float = 0.05
    replications: int = 10_000
    seed: int = 20201
    methods: tuple = METHODS
    target_power: float = 0.81
    shapes: tuple = None

    def __post_init__(self):
        if int(self.n_per_group) != self.n_per_group or self.n_per_group < 2:
            raise ConfigError(f"n_per_group must be an integer >= 2, got {self.n_per_group}")
        if not self.sigma > 0:
            raise ConfigError(f"sigma must be positive, got {self.sigma}")
        if self.delta is not None and not self.delta > 0:
            raise ConfigError(f"delta must be positive, got {self.delta}")
        if not 0 < self.alpha < 1:
            raise ConfigError(f"alpha must lie in (0, 1), got {self.alpha}")
        if int(self.replications) != self.replications or self.replications < 1:
            raise ConfigError(f"replications must be a positive integer, got {self.replications}")
        if not 0 < self.target_power < 1:
            raise ConfigError(f"target_power must lie in (0, 1), got {self.target_power}")
        methods = tuple(self.methods)
        bad = [m for m in methods if m not in METHODS]
        if bad or not methods:
            raise ConfigError(f"methods: unknown method name(s) {bad}; choose from {METHODS}")
        object.__setattr__(self, "methods", methods)
        if self.shapes is not None:
            names = {s[0] for s in _SHAPES}
            shapes = tuple(self.shapes)
            bad = [s for s in shapes if s not in names]
            if bad:
                raise ConfigError(f"shapes: unknown shape name(s) {bad}")
            object.__setattr__(self, "shapes", shapes)


def load_config(path):
    """Read a :class:`SimConfig` from a YAML or JSON mapping.

    Reported studies need at least 1000 replications.
    """
    try:
        raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError("config must be a key-value mapping")
    known = {f.name for f in fields(SimConfig)}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {', '.join(unknown)}")
    if "methods" in raw and isinstance(raw["methods"], str):
        raw["methods"] = [m.strip() for m in raw["methods"].split(",")]
    cfg = SimConfig(**raw)
    if cfg.replications < 1000:
        raise ConfigError(f"replications: reported studies need >= 1000, got {cfg.replications}")
    return cfg


def _noise(cfg, k, rep_index):
    rng = np.random.default_rng([cfg.seed, rep_index])
    return rng.standard_normal((k + 1, cfg.n_per_group))


def generate_dataset(shape, cfg, rep_index):
    """One replication as a list of per-group response arrays.

    The noise depends only on ``(cfg.seed, rep_index)``, so all shapes share
    common random numbers.
    """
    z = _noise(cfg, shape.k, rep_index)
    y = shape.means[:, None] + cfg.sigma * z
    return list(y)


def _balanced(cfg, k):
    return Design((cfg.n_per_group,) * (k + 1))


def _standardizer(cm, design):
    return np.sqrt(cm.rows ** 2 @ (1.0 / np.asarray(design.n, dtype=float)))


def critical_values(design, alpha, seed=0):
    """Level ``1 - alpha`` critical values of every test the study uses.

    Returns ``(dunnett, williams_by_top_dose, pairwise)`` where
    ``williams_by_top_dose[j]`` belongs to the sub-Williams test of ``{0..j}``.
    """
    df = sum(design.n) - len(design.n)
    level = 1.0 - alpha
    c_d = mvt_quantile_1sided(level, contrast_correlation(dunnett_contrasts(design), design),
                              df, rng_seed=seed)
    c_t = float(t_quantile(level, df))
    c_w = {1: c_t}
    for j in range(2, design.k + 1):
        cm = sub_williams_contrasts(design, j)
        c_w[j] = mvt_quantile_1sided(level, contrast_correlation(cm, design), df, rng_seed=seed)
    return c_d, c_w, c_t


def dunnett_top_dose_power(delta, cfg, c_d=None, k=3):
    """Power of Dunnett's highest-dose comparison in shape ``M4``, analytically.

    The highest-dose statistic is noncentral t with the full-model df; it
    rejects when it exceeds the Dunnett critical value.
    """
    design = _balanced(cfg, k)
    df = sum(design.n) - len(design.n)
    if c_d is None:
        c_d = critical_values(design, cfg.alpha, cfg.seed)[0]
    mu_top = dict((s[0], s[1]) for s in _SHAPES)[CALIBRATION_SHAPE][-1]
    ncp = mu_top * delta / (cfg.sigma * math.sqrt(2.0 / cfg.n_per_group))
    if ncp == 0:
        return float(stats.t.sf(c_d, df))
    return float(stats.nct.sf(c_d, df, ncp))


def calibrate_delta(cfg, target_power=None):
    """Effect unit at which Dunnett's top-dose power in shape ``M4`` hits the target."""
    target = cfg.target_power if target_power is None else target_power
    if not 0 < target < 1:
        raise DomainError(f"target power must lie in (0, 1), got {target}")
    design = _balanced(cfg, 3)
    c_d = critical_values(design, cfg.alpha, cfg.seed)[0]

    def gap(delta):
        return dunnett_top_dose_power(delta, cfg, c_d) - target

    if gap(0.0) >= 0:
        raise CalibrationError(
            f"target power {target} does not exceed the null rejection rate "
            f"{gap(0.0) + target:.4f}")
    hi = cfg.sigma
    for _ in range(60):
        if gap(hi) > 0:
            break
        hi *= 2.0
    else:
        raise CalibrationError(f"no effect size up to {hi:g} reaches power {target}")
    return float(optimize.brentq(gap, 0.0, hi, xtol=1e-12, rtol=1e-12))


@dataclass(frozen=True)
class PowerEntry:
    """Rejection rate of one method for one comparison of one shape.

    ``comparison`` is a dose index, or ``"any"`` for the rate of at least
    one rejection (the familywise error rate under the null shape).
    """

    shape: str
    method: str
    comparison: object
    estimate: float
    mc_se: float
    rejections: int


def _entry(shape, method, comparison, rejected):
    reps = rejected.size
    count = int(np.count_nonzero(rejected))
    est = count / reps
    return PowerEntry(shape, method, comparison, est, math.sqrt(est * (1 - est) / reps), count)


@dataclass(frozen=True)
class PowerTable:
    config: dict
    delta: float
    entries: tuple = field(default_factory=tuple)

    def get(self, shape, method, comparison):
        for e in self.entries:
            if e.shape == shape and e.method == method and e.comparison == comparison:
                return e
        raise KeyError((shape, method, comparison))

    def to_dict(self):
        return {"config": self.config, "delta": self.delta,
                "entries": [asdict(e) for e in self.entries]}

    @classmethod
    def from_dict(cls, doc):
        entries = tuple(PowerEntry(**e) for e in doc["entries"])
        return cls(doc["config"], doc["delta"], entries)

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    def to_csv(self):
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["shape", "method", "comparison", "estimate", "mc_se", "rejections"])
        for e in self.entries:
            writer.writerow([e.shape, e.method, e.comparison, repr(e.estimate),
                             repr(e.mc_se), e.rejections])
        return buf.getvalue()

    def format_table(self):
        """Plain-text grid: one row per shape, one column per method and comparison."""
        shapes = []
        for e in self.entries:
            if e.shape not in shapes:
                shapes.append(e.shape)
        desc = {s[0]: s[3] for s in _SHAPES}
        cols = [("D", 1), ("D", 2), ("D", 3), ("D", "any"), ("W", 3), ("CW", 1), ("CW", 2),
                ("CW", 3), ("CP", 1), ("CP", 2), ("CP", 3)]
        present = {(e.method, e.comparison) for e in self.entries}
        cols = [c for c in cols if c in present]
        head = ["shape", "means"] + [f"{m}{'a' if c == 'any' else c}" for m, c in cols]
        lines = ["  ".join(f"{h:>6}" if i > 1 else f"{h:<24}" if i == 1 else f"{h:<5}"
                           for i, h in enumerate(head))]
        for s in shapes:
            cells = [f"{s:<5}", f"{desc.get(s, ''):<24}"]
            for m, c in cols:
                cells.append(f"{self.get(s, m, c).estimate:>6.3f}")
            lines.append("  ".join(cells))
        return "\n".join(lines)


def _decisions_vectorized(y, design, crit):
    """Rejection indicators per method and comparison for a block of replications."""
    c_d, c_w, c_t = crit
    k = design.k
    n = np.asarray(design.n, dtype=float)
    df = sum(design.n) - len(design.n)
    means = y.mean(axis=2)
    ss = ((y - means[:, :, None]) ** 2).sum(axis=(1, 2))
    s = np.sqrt(ss / df)

    def tstats(cm):
        return (means @ cm.rows.T) / (s[:, None] * _standardizer(cm, design))

    t_pair = tstats(dunnett_contrasts(design))
    t_will = tstats(williams_contrasts(design))
    out = {}
    for i in range(1, k + 1):
        out[("D", i)] = t_pair[:, i - 1] >= c_d
    out[("D", "any")] = t_pair.max(axis=1) >= c_d
    out[("W", k)] = t_will[:, 0] >= c_w[k]
    out[("W", "any")] = t_will.max(axis=1) >= c_w[k]
    sub_reject = {}
    for j in range(1, k + 1):
        sub_reject[j] = tstats(sub_williams_contrasts(design, j)).max(axis=1) >= c_w[j]
    pair_reject = {j: t_pair[:, j - 1] >= c_t for j in range(1, k + 1)}
    for name, subsets in (("CW", sub_reject), ("CP", pair_reject)):
        chain = np.ones(len(s), dtype=bool)
        for i in range(k, 0, -1):
            chain = chain & subsets[i]
            out[(name, i)] = chain.copy()
        # along a chain some dose is rejected iff the top dose is
        out[(name, "any")] = out[(name, k)].copy()
    return out


def _decisions_exact(samples, cfg, rep_index, k):
    fit = fit_groups(samples)
    seed = int(np.random.SeedSequence([cfg.seed, rep_index, 1]).generate_state(1)[0])
    a = cfg.alpha
    out = {}
    d = dunnett_test(fit, seed=seed, tol=SIM_TOL)
    for i in range(1, k + 1):
        out[("D", i)] = d.results[i - 1].adj_p <= a
    out[("D", "any")] = d.global_p <= a
    w = williams_test(fit, seed=seed, tol=SIM_TOL)
    out[("W", k)] = w.results[0].adj_p <= a
    out[("W", "any")] = w.global_p <= a
    for name, proc in (("CW", ctp_cw), ("CP", ctp_cp)):
        rep = proc(fit, seed=seed, tol=SIM_TOL)
        for i in range(1, k + 1):
            out[(name, i)] = rep.elementary_adj_p[i] <= a
        out[(name, "any")] = min(rep.elementary_adj_p.values()) <= a
    return out


def run_power_study(cfg, engine="vectorized"):
    """Estimate rejection rates for every selected shape, method and comparison."""
    if engine not in ("vectorized", "exact"):
        raise DomainError(f"engine must be 'vectorized' or 'exact', got {engine!r}")
    delta = cfg.delta if cfg.delta is not None else calibrate_delta(cfg)
    shapes = table1_shapes(delta)
    if cfg.shapes is not None:
        shapes = [s for s in shapes if s.name in cfg.shapes]
    k = shapes[0].k
    design = _balanced(cfg, k)
    reps = cfg.replications
    noise = np.stack([_noise(cfg, k, r) for r in range(reps)])
    if engine == "vectorized":
        crit = critical_values(design, cfg.alpha, cfg.seed)
    entries = []
    for shape in shapes:
        if engine == "vectorized":
            y = shape.means[None, :, None] + cfg.sigma * noise
            dec = _decisions_vectorized(y, design, crit)
        else:
            per_rep = [_decisions_exact(list(shape.means[:, None] + cfg.sigma * noise[r]),
                                        cfg, r, k) for r in range(reps)]
            dec = {key: np.array([d[key] for d in per_rep]) for key in per_rep[0]}
        for method in cfg.methods:
            keys = [key for key in dec if key[0] == method]
            keys.sort(key=lambda key: (key[1] == "any", key[1] if key[1] != "any" else 0))
            for key in keys:
                entries.append(_entry(shape.name, method, key[1], dec[key]))
    doc = asdict(cfg)
    doc["methods"] = list(cfg.methods)
    doc["shapes"] = None if cfg.shapes is None else list(cfg.shapes)
    doc["engine"] = engine
    return PowerTable(doc, float(delta), tuple(entries))


def write_outputs(table, out_dir):
    """Write ``power_table.csv`` and ``power_table.json``; return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    csv_path = out / "power_table.csv"
    json_path = out / "power_table.json"
    csv_path.write_text(table.to_csv(), encoding="utf-8")
    json_path.write_text(table.to_json() + "\n", encoding="utf-8")
    return csv_path, json_path
