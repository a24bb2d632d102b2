"""Experiment harness: sweeps over C and the modification ratio, repeated
randomized trials, timing of the region tests against full retraining.
"""
from __future__ import annotations

import configparser
import csv
import enum
import json
import logging
import math
import time
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .data_io import (Dataset, ModificationPlan, apply_modification, augment_bias, harmonize_dims,
                      load_libsvm, plan_modification)
from .losses import LossKind
from .regions import (HalfSpace, HalfSpaceDegenerate, HalfSpaceMode, SegmentRegion, SphereRegion,
                      cut_point, half_space, modification_gradients, segment_region, sphere_region)
from .tasks import certified_agreement, coefficient_sensitivity, label_sensitivity, oracle_signs
from .trainer import ConvergenceError, TrainConfig, retrain_oracle, train

log = logging.getLogger(__name__)

CSV_COLUMNS = ("loss", "C", "p_up", "trial", "method", "mean_tightness", "error_ratio",
               "time_ms", "containment_violations")
METHODS = ("Sphere", "Segment", "Retrain")


class ConfigError(ValueError):
    pass


class Task(enum.Enum):
    COEFFICIENTS = "coefficients"
    LABELS = "labels"
    BOTH = "both"

    @classmethod
    def parse(cls, name: "str | Task") -> "Task":
        return name if isinstance(name, cls) else cls(str(name).strip().lower())

    @property
    def coefficients(self) -> bool:
        return self is not Task.LABELS

    @property
    def labels(self) -> bool:
        return self is not Task.COEFFICIENTS


@dataclass(frozen=True)
class SyntheticSpec:
    """Two isotropic Gaussians at +/- ``separation / sqrt(dim)`` per coordinate."""

    n_train: int = 800
    n_test: int = 400
    dim: int = 10
    separation: float = 2.0
    seed: int = 0


def two_gaussians(n: int, dim: int, separation: float = 2.0, seed: int = 0) -> Dataset:
    rng = np.random.default_rng(seed)
    y = rng.choice(np.array([-1.0, 1.0]), size=n)
    X = rng.standard_normal((n, dim)) + (0.5 * separation / math.sqrt(dim)) * y[:, None]
    return Dataset.from_dense(X, y)


def synthetic_split(spec: SyntheticSpec) -> tuple[Dataset, Dataset]:
    full = two_gaussians(spec.n_train + spec.n_test, spec.dim, spec.separation, spec.seed)
    return full.subset(np.arange(spec.n_train)), full.subset(np.arange(spec.n_train, full.n))


@dataclass(frozen=True)
class ExperimentConfig:
    train_path: str | None = None
    test_path: str | None = None
    loss: LossKind = LossKind.LOGISTIC
    c_grid: tuple[float, ...] = (0.2, 0.5, 1.0)
    p_up_grid: tuple[float, ...] = (1e-4, 2e-4, 5e-4, 1e-3, 2e-3, 5e-3, 1e-2, 2e-2, 5e-2, 1e-1)
    trials: int = 30
    seed: int = 0
    half_space_mode: HalfSpaceMode = HalfSpaceMode.EXACT
    bias: bool = True
    task: Task = Task.BOTH
    add_fraction: float = 0.5
    grad_tol: float = 1e-10
    timing: bool = True
    synthetic: SyntheticSpec = field(default_factory=SyntheticSpec)

    def __post_init__(self):
        object.__setattr__(self, "loss", LossKind.parse(self.loss))
        object.__setattr__(self, "half_space_mode", HalfSpaceMode.parse(self.half_space_mode))
        object.__setattr__(self, "task", Task.parse(self.task))
        object.__setattr__(self, "c_grid", tuple(float(c) for c in self.c_grid))
        object.__setattr__(self, "p_up_grid", tuple(float(p) for p in self.p_up_grid))
        if not self.c_grid or not self.p_up_grid:
            raise ConfigError("c_grid and p_up_grid must be nonempty")
        if any(c <= 0 for c in self.c_grid):
            raise ConfigError("every C must be positive")
        if any(p < 0 for p in self.p_up_grid):
            raise ConfigError("every p_up must be >= 0")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not 0.0 <= self.add_fraction <= 1.0:
            raise ConfigError("add_fraction must lie in [0, 1]")
        if (self.train_path is None) != (self.test_path is None):
            raise ConfigError("give both train_path and test_path, or neither")


@dataclass(frozen=True)
class ExperimentRecord:
    loss: str
    C: float
    p_up: float
    trial: int
    method: str
    mean_tightness: float | None
    error_ratio: float | None
    time_ms: float
    containment_violations: int

    def key(self):
        return (self.loss, self.C, self.p_up, self.trial, self.method)


@dataclass(frozen=True)
class TrialDiagnostics:
    """Per-trial extras that do not belong in the CSV schema."""

    C: float
    p_up: float
    trial: int
    psi: float | None
    degenerate: bool
    region_contains: bool
    certified_agreement_sphere: float | None
    certified_agreement_segment: float | None


@dataclass
class ExperimentResult:
    records: list[ExperimentRecord]
    diagnostics: list[TrialDiagnostics]
    skipped_trials: int = 0


# --- configuration -------------------------------------------------------

def _floats(text: str) -> tuple[float, ...]:
    out = []
    for tok in text.replace(";", ",").split(","):
        tok = tok.strip()
        if not tok:
            continue
        out.append(float(tok[:-1]) / 100.0 if tok.endswith("%") else float(tok))
    return tuple(out)


def _bool(text: str) -> bool:
    key = str(text).strip().lower()
    if key in ("1", "true", "yes", "on"):
        return True
    if key in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


_SYNTH_KEYS = {"n_train": int, "n_test": int, "dim": int, "separation": float, "data_seed": int}


def config_from_mapping(values: dict[str, str], base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Build a config from flat string key/values layered over ``base``."""
    cfg = base or ExperimentConfig()
    kw: dict = {}
    synth: dict = {}
    try:
        for key, raw in values.items():
            key = key.strip().lower().replace("-", "_")
            if raw is None:
                continue
            if key in ("train", "train_path"):
                kw["train_path"] = raw
            elif key in ("test", "test_path"):
                kw["test_path"] = raw
            elif key == "loss":
                kw["loss"] = LossKind.parse(raw)
            elif key in ("c", "c_grid"):
                kw["c_grid"] = _floats(raw)
            elif key in ("pup", "p_up", "p_up_grid"):
                kw["p_up_grid"] = _floats(raw)
            elif key == "trials":
                kw["trials"] = int(raw)
            elif key == "seed":
                kw["seed"] = int(raw)
            elif key in ("mode", "half_space_mode"):
                kw["half_space_mode"] = HalfSpaceMode.parse(raw)
            elif key == "bias":
                kw["bias"] = _bool(raw)
            elif key == "task":
                kw["task"] = Task.parse(raw)
            elif key == "add_fraction":
                kw["add_fraction"] = float(raw)
            elif key == "grad_tol":
                kw["grad_tol"] = float(raw)
            elif key == "timing":
                kw["timing"] = _bool(raw)
            elif key in _SYNTH_KEYS:
                synth["seed" if key == "data_seed" else key] = _SYNTH_KEYS[key](raw)
            else:
                raise ConfigError(f"unknown config key {key!r}")
    except (ValueError, KeyError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc
    if synth:
        kw["synthetic"] = replace(cfg.synthetic, **synth)
    try:
        return replace(cfg, **kw)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path) -> ExperimentConfig:
    """Read a flat ``key = value`` file (``#`` comments, no sections needed)."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",), interpolation=None)
    text = Path(path).read_text(encoding="utf-8")
    try:
        parser.read_string("[experiment]\n" + text)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return config_from_mapping(dict(parser["experiment"]))


# --- running -------------------------------------------------------------

def trial_seed(seed: int, c_index: int, p_index: int, trial: int) -> int:
    return int(np.random.SeedSequence([seed, c_index, p_index, trial]).generate_state(1, np.uint64)[0])


def load_datasets(cfg: ExperimentConfig) -> tuple[Dataset, Dataset]:
    if cfg.train_path is not None:
        train_set, test_set = load_libsvm(cfg.train_path), load_libsvm(cfg.test_path)
    else:
        train_set, test_set = synthetic_split(cfg.synthetic)
    train_set, test_set = harmonize_dims(train_set, test_set)
    if cfg.bias:
        train_set, test_set = augment_bias(train_set), augment_bias(test_set)
    return train_set, test_set


def _split_base_pool(train_set: Dataset, cfg: ExperimentConfig, rng: np.random.Generator):
    """Random base set plus a disjoint pool large enough for the largest addition."""
    n = train_set.n
    frac = cfg.add_fraction * max(cfg.p_up_grid)
    n_pool = min(n - 1, int(math.ceil(frac * n / (1.0 + frac))) + 1) if frac > 0 else 0
    perm = rng.permutation(n)
    return train_set.subset(np.sort(perm[n_pool:])), train_set.subset(np.sort(perm[:n_pool]))


def _violations(lower, upper, value) -> int:
    slack = 1e-8 * (1.0 + np.abs(value))
    return int(np.count_nonzero((value < lower - slack) | (value > upper + slack)))


def _in_sphere(s: SphereRegion, w: np.ndarray) -> bool:
    return float(np.linalg.norm(w - s.q)) <= s.r + 1e-8 * (1.0 + float(np.linalg.norm(w)))


def _in_plane(h: HalfSpace, w: np.ndarray) -> bool:
    return float(h.n @ w) <= h.c + 1e-8 * (1.0 + float(np.linalg.norm(w)))


def run_trial(cfg, train_set, test_set, C, p_up, trial, seed):
    """One (C, p_up, trial) cell: three records plus diagnostics."""
    rng = np.random.default_rng(seed)
    base, pool = _split_base_pool(train_set, cfg, rng)
    plan = ModificationPlan(p_up=p_up, add_fraction=cfg.add_fraction, seed=int(rng.integers(2**63)))
    m = plan_modification(base, pool, plan, check_disjoint=False)
    tcfg = TrainConfig(C=C, grad_tol=cfg.grad_tol)
    kind = cfg.loss
    w0 = train(kind, base, tcfg).w

    # Sphere test.
    t0 = time.perf_counter()
    g = modification_gradients(kind, w0, base, m, C)
    sphere = sphere_region(g, w0)
    sph_coef = coefficient_sensitivity(sphere) if cfg.task.coefficients else None
    sph_lab = label_sensitivity(sphere, test_set) if cfg.task.labels else None
    t_sphere = time.perf_counter() - t0

    # Segment test; a degenerate plane falls back to the sphere.
    t0 = time.perf_counter()
    g2 = modification_gradients(kind, w0, base, m, C)
    sphere2 = sphere_region(g2, w0)
    d1 = None
    region: SphereRegion | SegmentRegion = sphere2
    degenerate = False
    if sphere2.r > 0.0:
        if cfg.half_space_mode is HalfSpaceMode.EXACT:
            d1 = apply_modification(base, m)
        try:
            h = half_space(kind, C, d1, cut_point(g2, w0), cfg.half_space_mode, g=g2, w0=w0)
            region = segment_region(sphere2, h)
        except HalfSpaceDegenerate:
            degenerate = True
    seg_coef = coefficient_sensitivity(region) if cfg.task.coefficients else None
    seg_lab = label_sensitivity(region, test_set) if cfg.task.labels else None
    t_segment = time.perf_counter() - t0

    retrained = retrain_oracle(kind, base, m, tcfg)
    w1 = retrained.w
    truth = oracle_signs(test_set, w1) if cfg.task.labels else None

    def violations(reg, coef, lab) -> int:
        count = 0
        if isinstance(reg, SegmentRegion):
            count += (not _in_sphere(reg.sphere, w1)) + (not _in_plane(reg.plane, w1))
        else:
            count += not _in_sphere(reg, w1)
        if coef is not None:
            count += _violations(coef.lower, coef.upper, w1)
        if lab is not None:
            certified = lab.signs != 0
            count += int(np.count_nonzero(lab.signs[certified] != truth[certified]))
        return count

    ms = (lambda sec: 1e3 * sec) if cfg.timing else (lambda sec: 0.0)
    loss = kind.value
    recs = [
        ExperimentRecord(loss, C, p_up, trial, "Sphere",
                         sph_coef.mean_tightness if sph_coef else None,
                         sph_lab.error_ratio if sph_lab else None,
                         ms(t_sphere), violations(sphere, sph_coef, sph_lab)),
        ExperimentRecord(loss, C, p_up, trial, "Segment",
                         seg_coef.mean_tightness if seg_coef else None,
                         seg_lab.error_ratio if seg_lab else None,
                         ms(t_segment), violations(region, seg_coef, seg_lab)),
        ExperimentRecord(loss, C, p_up, trial, "Retrain", None, None, ms(retrained.wall_time), 0),
    ]
    diag = TrialDiagnostics(
        C=C, p_up=p_up, trial=trial,
        psi=region.psi if isinstance(region, SegmentRegion) else None,
        degenerate=degenerate,
        region_contains=violations(region, None, None) == 0,
        certified_agreement_sphere=certified_agreement(sph_lab, truth) if sph_lab else None,
        certified_agreement_segment=certified_agreement(seg_lab, truth) if seg_lab else None,
    )
    return recs, diag


def run_experiment(cfg: ExperimentConfig, data: tuple[Dataset, Dataset] | None = None) -> ExperimentResult:
    """Run the full (C, p_up, trial) sweep.

    ``data`` overrides the configured (train, test) sources; it is used as
    given, without bias augmentation. Trials whose training fails to
    converge are skipped and counted.
    """
    train_set, test_set = data if data is not None else load_datasets(cfg)
    if train_set.dim != test_set.dim:
        raise ValueError("train and test dimensions differ")
    records: list[ExperimentRecord] = []
    diags: list[TrialDiagnostics] = []
    skipped = 0
    for ci, C in enumerate(cfg.c_grid):
        for pi, p_up in enumerate(cfg.p_up_grid):
            for trial in range(cfg.trials):
                seed = trial_seed(cfg.seed, ci, pi, trial)
                try:
                    recs, diag = run_trial(cfg, train_set, test_set, C, p_up, trial, seed)
                except ConvergenceError as exc:
                    log.warning("C=%g p_up=%g trial=%d skipped: %s", C, p_up, trial, exc)
                    skipped += 1
                    continue
                records.extend(recs)
                diags.append(diag)
    return ExperimentResult(records, diags, skipped)


# --- output --------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.9g}"
    return str(value)


def emit_csv(records: Iterable[ExperimentRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(CSV_COLUMNS)
        for rec in records:
            writer.writerow([_fmt(getattr(rec, col)) for col in CSV_COLUMNS])


def _parse_field(name: str, text: str):
    if name in ("loss", "method"):
        return text
    if name in ("trial", "containment_violations"):
        return int(text)
    if name in ("mean_tightness", "error_ratio"):
        return None if text == "" else float(text)
    return float(text)


def read_csv(path) -> list[ExperimentRecord]:
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header {reader.fieldnames}")
        return [ExperimentRecord(**{k: _parse_field(k, row[k]) for k in CSV_COLUMNS}) for row in reader]


def _round9(value):
    return float(f"{value:.9g}") if isinstance(value, float) else value


def emit_json(records: Iterable[ExperimentRecord], path) -> None:
    rows = [{col: _round9(getattr(rec, col)) for col in CSV_COLUMNS} for rec in records]
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(rows, fh, indent=1)
        fh.write("\n")


def read_json(path) -> list[ExperimentRecord]:
    with open(path, encoding="utf-8") as fh:
        rows = json.load(fh)
    out = []
    for row in rows:
        kw = {col: row[col] for col in CSV_COLUMNS}
        for col in ("C", "p_up", "time_ms"):
            kw[col] = float(kw[col])
        out.append(ExperimentRecord(**kw))
    return out


@dataclass(frozen=True)
class SummaryRow:
    loss: str
    C: float
    p_up: float
    method: str
    mean_tightness: float | None
    error_ratio: float | None
    time_ms: float
    trials: int
    containment_violations: int


def _mean_or_none(values: Sequence[float | None]) -> float | None:
    vals = [v for v in values if v is not None]
    return float(np.mean(vals)) if vals else None


def summarize(records: Sequence[ExperimentRecord]) -> list[SummaryRow]:
    """Mean over trials for every (loss, C, p_up, method) cell."""
    if not records:
        raise ValueError("no records to summarize")
    order = {m: i for i, m in enumerate(METHODS)}
    cells: dict[tuple, list[ExperimentRecord]] = {}
    for rec in records:
        cells.setdefault((rec.loss, rec.C, rec.p_up, rec.method), []).append(rec)
    rows = []
    for key in sorted(cells, key=lambda k: (k[0], k[1], k[2], order.get(k[3], 99), k[3])):
        group = cells[key]
        rows.append(SummaryRow(
            *key,
            mean_tightness=_mean_or_none([r.mean_tightness for r in group]),
            error_ratio=_mean_or_none([r.error_ratio for r in group]),
            time_ms=float(np.mean([r.time_ms for r in group])),
            trials=len(group),
            containment_violations=sum(r.containment_violations for r in group),
        ))
    return rows


def format_summary(rows: Sequence[SummaryRow]) -> str:
    head = ("loss", "C", "p_up(%)", "method", "tightness", "error(%)", "time(ms)", "trials", "violations")
    body = []
    for r in rows:
        body.append((r.loss, f"{r.C:g}", f"{100 * r.p_up:g}", r.method,
                     "-" if r.mean_tightness is None else f"{r.mean_tightness:.3e}",
                     "-" if r.error_ratio is None else f"{100 * r.error_ratio:.2f}",
                     f"{r.time_ms:.2f}", str(r.trials), str(r.containment_violations)))
    widths = [max(len(h), *(len(b[i]) for b in body)) for i, h in enumerate(head)]
    lines = ["  ".join(h.rjust(w) for h, w in zip(head, widths))]
    lines.append("  ".join("-" * w for w in widths))
    lines.extend("  ".join(c.rjust(w) for c, w in zip(b, widths)) for b in body)
    return "\n".join(lines)


def format_tables(rows: Sequence[SummaryRow]) -> str:
    """Pivot with P_up across columns, one block per (loss, C)."""
    blocks = []
    by_lc: dict[tuple, list[SummaryRow]] = {}
    for r in rows:
        by_lc.setdefault((r.loss, r.C), []).append(r)
    for (loss, C), group in by_lc.items():
        pups = sorted({r.p_up for r in group})
        cell = {(r.method, r.p_up): r for r in group}
        lines = [f"{loss}  C = {C:g}", "P_up(%)".ljust(22) + "".join(f"{100 * p:>10g}" for p in pups)]
        for method in METHODS:
            if not any((method, p) in cell for p in pups):
                continue
            specs = [("Time(ms)", lambda r: f"{r.time_ms:.2f}")]
            if method != "Retrain":
                specs += [("Tightness", lambda r: "-" if r.mean_tightness is None else f"{r.mean_tightness:.2e}"),
                          ("Error(%)", lambda r: "-" if r.error_ratio is None else f"{100 * r.error_ratio:.2f}")]
            for label, fn in specs:
                vals = "".join(f"{fn(cell[(method, p)]) if (method, p) in cell else '':>10}" for p in pups)
                lines.append(f"{method:<12}{label:<10}" + vals)
        blocks.append("\n".join(lines))
    return "\n\n".join(blocks)


def containment_audit(result: ExperimentResult) -> dict[tuple[float, float], float]:
    """Fraction of trials per (C, p_up) whose segment region held the retrained optimum."""
    cells: dict[tuple[float, float], list[bool]] = {}
    for d in result.diagnostics:
        cells.setdefault((d.C, d.p_up), []).append(d.region_contains)
    return {k: float(np.mean(v)) for k, v in sorted(cells.items())}


def format_audit(audit: dict[tuple[float, float], float]) -> str:
    lines = ["C        p_up(%)   containment_rate"]
    lines += [f"{C:<8g} {100 * p:<9g} {rate:.4f}" for (C, p), rate in audit.items()]
    return "\n".join(lines)


def record_fields() -> tuple[str, ...]:
    return tuple(f.name for f in fields(ExperimentRecord))
