"""LIBSVM-format datasets, bias augmentation and add/remove modifications.

A :class:`Dataset` stores its instances as a CSR matrix (0-based columns)
plus a label vector; :class:`Instance` is the per-row view with 1-based
feature indices, matching the file format.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence, TextIO

import numpy as np
import scipy.sparse as sp


class DataFormatError(ValueError):
    """Malformed LIBSVM input."""


class ModificationError(ValueError):
    """A modification or modification plan that cannot be realised."""


@dataclass(frozen=True)
class Instance:
    features: Mapping[int, float]
    label: int

    def __post_init__(self):
        if self.label not in (1, -1):
            raise ValueError(f"label must be +1 or -1, got {self.label!r}")
        for idx in self.features:
            if idx < 1:
                raise ValueError(f"feature indices are 1-based, got {idx}")


@dataclass(frozen=True, eq=False)
class Dataset:
    """Labelled instances as a sparse design matrix.

    Parameters
    ----------
    X : scipy.sparse.csr_matrix, shape (n, dim)
    y : ndarray of {+1, -1}, shape (n,)
    """

    X: sp.csr_matrix
    y: np.ndarray

    def __post_init__(self):
        X = sp.csr_matrix(self.X, dtype=np.float64)
        X.sort_indices()
        y = np.asarray(self.y, dtype=np.float64).ravel()
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} rows but {y.shape[0]} labels")
        if y.size and not np.all(np.abs(y) == 1.0):
            raise ValueError("labels must be +1 or -1")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def dim(self) -> int:
        return self.X.shape[1]

    def __len__(self) -> int:
        return self.n

    def instance(self, i: int) -> Instance:
        row = self.X.getrow(i)
        feats = {int(j) + 1: float(v) for j, v in zip(row.indices, row.data)}
        return Instance(feats, int(self.y[i]))

    @property
    def instances(self) -> list[Instance]:
        return [self.instance(i) for i in range(self.n)]

    def subset(self, rows: Sequence[int] | np.ndarray) -> "Dataset":
        rows = np.asarray(rows, dtype=np.intp)
        return Dataset(self.X[rows], self.y[rows])

    def with_dim(self, dim: int) -> "Dataset":
        """Pad with all-zero columns up to ``dim``."""
        if dim < self.dim:
            raise ValueError(f"cannot shrink dim {self.dim} to {dim}")
        X = sp.csr_matrix((self.X.data, self.X.indices, self.X.indptr), shape=(self.n, dim))
        return Dataset(X, self.y)

    def equals(self, other: "Dataset") -> bool:
        if self.X.shape != other.X.shape or not np.array_equal(self.y, other.y):
            return False
        return (self.X != other.X).nnz == 0

    @classmethod
    def from_instances(cls, instances: Iterable[Instance], dim: int | None = None) -> "Dataset":
        instances = list(instances)
        data, indices, indptr = [], [], [0]
        max_idx = 0
        for inst in instances:
            for idx in sorted(inst.features):
                indices.append(idx - 1)
                data.append(float(inst.features[idx]))
                max_idx = max(max_idx, idx)
            indptr.append(len(indices))
        dim = max_idx if dim is None else dim
        if dim < max_idx:
            raise ValueError(f"dim {dim} is below max feature index {max_idx}")
        X = sp.csr_matrix(
            (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
            shape=(len(instances), dim),
        )
        return cls(X, np.array([inst.label for inst in instances], dtype=np.float64))

    @classmethod
    def from_dense(cls, X: np.ndarray, y: np.ndarray) -> "Dataset":
        return cls(sp.csr_matrix(np.asarray(X, dtype=np.float64)), y)


def _parse_label(token: str, lineno: int) -> int:
    try:
        value = float(token)
    except ValueError:
        raise DataFormatError(f"line {lineno}: bad label {token!r}") from None
    if value == 0.0 or not np.isfinite(value):
        raise DataFormatError(f"line {lineno}: label {token!r} has no sign")
    return 1 if value > 0 else -1


def parse_libsvm(source: str | TextIO) -> Dataset:
    """Parse LIBSVM text into a :class:`Dataset`.

    Any positive label maps to +1 and any negative label to -1. Errors carry
    the 1-based line number.
    """
    stream = io.StringIO(source) if isinstance(source, str) else source
    labels: list[int] = []
    data: list[float] = []
    indices: list[int] = []
    indptr = [0]
    max_idx = 0
    for lineno, raw in enumerate(stream, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tokens = line.split()
        labels.append(_parse_label(tokens[0], lineno))
        prev = 0
        for tok in tokens[1:]:
            idx_s, sep, val_s = tok.partition(":")
            if not sep:
                raise DataFormatError(f"line {lineno}: expected idx:val, got {tok!r}")
            try:
                idx, val = int(idx_s), float(val_s)
            except ValueError:
                raise DataFormatError(f"line {lineno}: expected idx:val, got {tok!r}") from None
            if idx < 1:
                raise DataFormatError(f"line {lineno}: feature index {idx} < 1")
            if idx <= prev:
                raise DataFormatError(f"line {lineno}: indices not strictly increasing at {idx}")
            prev = idx
            indices.append(idx - 1)
            data.append(val)
        max_idx = max(max_idx, prev)
        indptr.append(len(indices))
    if not labels:
        raise DataFormatError("no instances found")
    X = sp.csr_matrix(
        (np.asarray(data, dtype=np.float64), np.asarray(indices, dtype=np.int64), indptr),
        shape=(len(labels), max_idx),
    )
    return Dataset(X, np.asarray(labels, dtype=np.float64))


def load_libsvm(path) -> Dataset:
    with open(path, encoding="utf-8") as fh:
        return parse_libsvm(fh)


def format_libsvm(d: Dataset) -> str:
    lines = []
    for i in range(d.n):
        lo, hi = d.X.indptr[i], d.X.indptr[i + 1]
        pairs = " ".join(f"{j + 1}:{float(v)!r}" for j, v in zip(d.X.indices[lo:hi], d.X.data[lo:hi]))
        label = "+1" if d.y[i] > 0 else "-1"
        lines.append(f"{label} {pairs}".rstrip())
    return "\n".join(lines) + "\n"


def save_libsvm(d: Dataset, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(format_libsvm(d))


def harmonize_dims(*datasets: Dataset) -> list[Dataset]:
    """Pad every dataset to the largest dimension among them."""
    dim = max(d.dim for d in datasets)
    return [d.with_dim(dim) for d in datasets]


def augment_bias(d: Dataset) -> Dataset:
    """Append a constant-one feature at index ``dim + 1``.

    Not idempotent: each call adds another column.
    """
    ones = sp.csr_matrix(np.ones((d.n, 1)))
    return Dataset(sp.hstack([d.X, ones], format="csr"), d.y)


@dataclass(frozen=True)
class Modification:
    """Added instances (set A) and removed base-row indices (set S)."""

    added: Dataset | None = None
    removed: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.intp))

    def __post_init__(self):
        removed = np.asarray(self.removed, dtype=np.intp).ravel()
        if np.unique(removed).size != removed.size:
            raise ModificationError("removed indices must be distinct")
        object.__setattr__(self, "removed", removed)

    @property
    def n_added(self) -> int:
        return 0 if self.added is None else self.added.n

    @property
    def n_removed(self) -> int:
        return int(self.removed.size)

    @property
    def is_empty(self) -> bool:
        return self.n_added == 0 and self.n_removed == 0

    def validate(self, base: Dataset) -> None:
        if self.removed.size and (self.removed.min() < 0 or self.removed.max() >= base.n):
            raise ModificationError("removed index out of range")
        if self.added is not None and self.added.n and self.added.dim != base.dim:
            raise ModificationError(f"added dim {self.added.dim} != base dim {base.dim}")

    def removed_set(self, base: Dataset) -> Dataset:
        return base.subset(self.removed)

    def added_set(self, base: Dataset) -> Dataset:
        if self.added is None:
            return Dataset(sp.csr_matrix((0, base.dim)), np.zeros(0))
        return self.added

    def p_up(self, n0: int) -> float:
        return (self.n_added + self.n_removed) / n0


@dataclass(frozen=True)
class ModificationPlan:
    p_up: float
    add_fraction: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.p_up < 0:
            raise ModificationError(f"p_up must be >= 0, got {self.p_up}")
        if not 0.0 <= self.add_fraction <= 1.0:
            raise ModificationError(f"add_fraction must lie in [0, 1], got {self.add_fraction}")

    def counts(self, n0: int) -> tuple[int, int]:
        """Return ``(n_added, n_removed)`` for a base of size ``n0``."""
        total = self.p_up * n0
        n_add = int(round(self.add_fraction * total))
        n_rem = int(round((1.0 - self.add_fraction) * total))
        return n_add, n_rem


def _rows_overlap(a: Dataset, b: Dataset) -> bool:
    if a.n == 0 or b.n == 0:
        return False
    if a.dim != b.dim:
        return False

    def keys(d):
        out = set()
        for i in range(d.n):
            lo, hi = d.X.indptr[i], d.X.indptr[i + 1]
            out.add((d.y[i], d.X.indices[lo:hi].tobytes(), d.X.data[lo:hi].tobytes()))
        return out

    return not keys(a).isdisjoint(keys(b))


def plan_modification(
    base: Dataset, pool: Dataset, plan: ModificationPlan, check_disjoint: bool = True
) -> Modification:
    """Sample a modification of ``base`` according to ``plan``.

    Removed rows are drawn uniformly without replacement from ``base`` and
    added rows from ``pool``; the result depends only on ``plan.seed``.
    Disjointness is checked on exact row content, which costs O(n0 + |pool|).
    """
    n0 = base.n
    n_add, n_rem = plan.counts(n0)
    if n_rem > n0:
        raise ModificationError(f"cannot remove {n_rem} of {n0} instances")
    if n_add > pool.n:
        raise ModificationError(f"cannot add {n_add} instances from a pool of {pool.n}")
    if check_disjoint and n_add and _rows_overlap(base, pool):
        raise ModificationError("pool overlaps base")
    rng = np.random.default_rng(plan.seed)
    removed = np.sort(rng.choice(n0, size=n_rem, replace=False)) if n_rem else np.zeros(0, np.intp)
    added = pool.subset(np.sort(rng.choice(pool.n, size=n_add, replace=False))) if n_add else None
    return Modification(added=added, removed=removed)


def apply_modification(base: Dataset, m: Modification) -> Dataset:
    """Surviving base rows in original order, followed by the added rows."""
    m.validate(base)
    keep = np.ones(base.n, dtype=bool)
    keep[m.removed] = False
    kept = base.subset(np.flatnonzero(keep))
    if m.n_added == 0:
        return kept
    return Dataset(sp.vstack([kept.X, m.added.X], format="csr"), np.concatenate([kept.y, m.added.y]))
