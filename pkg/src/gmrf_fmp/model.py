"""Gaussian graphical models in information form.

A model is the pair (J, h) of a sparse symmetric precision matrix and a
potential vector; the implied density is N(mu, P) with mu = J^-1 h and
P = J^-1.  J is stored as a diagonal plus an upper-triangular edge list.

Key entry points:

* :class:`GaussianInfoModel` -- immutable container, dense/sparse views.
* :func:`load_model` / :func:`save_model` -- the ``ggm 1`` text format.
* :func:`normalize` -- rescale to unit diagonal (information-form whitening).
* :func:`partial_correlation` -- the walk matrix R = I - J of a normalized
  model, plus |R| and its row sums.
* :func:`extract_submodel` -- split out the subgraph left after removing a
  feedback set, together with the cross columns J_{T,p}.
"""

from __future__ import annotations

import io
import math
import os
from dataclasses import dataclass
from functools import cached_property
from typing import IO, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import ModelFormatError, ModelValueError, NotNormalizedError

__all__ = [
    "GaussianInfoModel",
    "PartialCorrelation",
    "SubmodelExtract",
    "load_model",
    "save_model",
    "read_model",
    "write_model",
    "normalize",
    "require_normalized",
    "denormalize_solution",
    "partial_correlation",
    "extract_submodel",
]

FORMAT_HEADER = "ggm 1"


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.flags.writeable = False
    return a


@dataclass(frozen=True, eq=False)
class GaussianInfoModel:
    """Sparse symmetric (J, h) in information form.

    diag holds J_ii, edges holds (i, j, J_ij) with i < j in canonical sorted
    order, h is the potential vector.  Arrays are read-only so instances can
    be shared freely.
    """

    n: int
    diag: np.ndarray
    edges: tuple[tuple[int, int, float], ...]
    h: np.ndarray

    def __post_init__(self):
        if self.n < 1:
            raise ModelValueError(f"node count must be positive, got {self.n}")
        diag = _readonly(np.asarray(self.diag, dtype=np.float64))
        h = _readonly(np.asarray(self.h, dtype=np.float64))
        if diag.shape != (self.n,):
            raise ModelValueError(f"diag has shape {diag.shape}, expected ({self.n},)")
        if h.shape != (self.n,):
            raise ModelValueError(f"h has shape {h.shape}, expected ({self.n},)")
        if not np.all(np.isfinite(diag)) or not np.all(np.isfinite(h)):
            raise ModelValueError("diag and h entries must be finite")
        bad = np.nonzero(diag <= 0.0)[0]
        if bad.size:
            raise ModelValueError(f"non-positive diagonal at node {int(bad[0])}")
        seen = set()
        canon = []
        for i, j, w in self.edges:
            i, j, w = int(i), int(j), float(w)
            if not (0 <= i < j < self.n):
                raise ModelValueError(f"edge ({i}, {j}) violates 0 <= i < j < n")
            if (i, j) in seen:
                raise ModelValueError(f"duplicate edge ({i}, {j})")
            if not math.isfinite(w):
                raise ModelValueError(f"non-finite weight on edge ({i}, {j})")
            seen.add((i, j))
            canon.append((i, j, w))
        canon.sort()
        object.__setattr__(self, "diag", diag)
        object.__setattr__(self, "h", h)
        object.__setattr__(self, "edges", tuple(canon))

    @property
    def m(self) -> int:
        return len(self.edges)

    @cached_property
    def edge_arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Edges as parallel arrays (i, j, w), empty arrays when m = 0."""
        if not self.edges:
            return (
                np.zeros(0, dtype=np.int64),
                np.zeros(0, dtype=np.int64),
                np.zeros(0, dtype=np.float64),
            )
        ei, ej, ew = zip(*self.edges)
        return (
            np.asarray(ei, dtype=np.int64),
            np.asarray(ej, dtype=np.int64),
            np.asarray(ew, dtype=np.float64),
        )

    @property
    def is_normalized(self) -> bool:
        return bool(np.all(self.diag == 1.0))

    def to_dense(self) -> np.ndarray:
        """Dense symmetric J."""
        j = np.zeros((self.n, self.n))
        np.fill_diagonal(j, self.diag)
        for i, k, w in self.edges:
            j[i, k] = w
            j[k, i] = w
        return j

    def to_csr(self) -> sp.csr_matrix:
        """Sparse symmetric J."""
        ei, ej, ew = self.edge_arrays
        rows = np.concatenate([np.arange(self.n), ei, ej])
        cols = np.concatenate([np.arange(self.n), ej, ei])
        vals = np.concatenate([self.diag, ew, ew])
        return sp.csr_matrix((vals, (rows, cols)), shape=(self.n, self.n))

    def structurally_equal(self, other: "GaussianInfoModel") -> bool:
        return (
            self.n == other.n
            and self.edges == other.edges
            and np.array_equal(self.diag, other.diag)
            and np.array_equal(self.h, other.h)
        )


@dataclass(frozen=True, eq=False)
class PartialCorrelation:
    """Walk matrix R = I - J of a unit-diagonal model, with |R| and row sums."""

    r: sp.csr_matrix
    r_abs: sp.csr_matrix
    row_sums: np.ndarray


@dataclass(frozen=True, eq=False)
class SubmodelExtract:
    """The split of a model induced by a feedback set F.

    kept lists the retained nodes T in ascending original numbering; j_sub is
    the submodel on T reindexed to 0..|T|-1 (None when F covers every node);
    cross_columns[p] is the dense
    length-|T| column J_{T,p} for each p in F (nonzero exactly on N(p) & T);
    feedback preserves the caller's F ordering and h_f are the potentials
    at F in that order.
    """

    kept: tuple[int, ...]
    j_sub: GaussianInfoModel | None
    cross_columns: dict[int, np.ndarray]
    feedback: tuple[int, ...]
    h_f: np.ndarray


# ---------------------------------------------------------------------------
# Text format


def _iter_meaningful_lines(text: str):
    for lineno, raw in enumerate(text.splitlines(), start=1):
        hash_pos = raw.find("#")
        if hash_pos >= 0:
            raw = raw[:hash_pos]
        stripped = raw.strip()
        if stripped:
            yield lineno, stripped


def _parse_int(token: str, what: str, lineno: int) -> int:
    try:
        return int(token)
    except ValueError:
        raise ModelFormatError(f"bad {what} {token!r}", lineno) from None


def _parse_float(token: str, what: str, lineno: int) -> float:
    try:
        v = float(token)
    except ValueError:
        raise ModelFormatError(f"bad {what} {token!r}", lineno) from None
    if not math.isfinite(v):
        raise ModelFormatError(f"{what} must be finite, got {token!r}", lineno)
    return v


def load_model(source: bytes | str | IO) -> GaussianInfoModel:
    """Parse the ``ggm 1`` text format from bytes, a string, or a file object.

    Lines: ``ggm 1`` header, ``n <nodes>``, ``m <edges>``, then n diagonal
    lines ``d <i> <J_ii>``, m edge lines ``e <i> <j> <J_ij>`` with i < j, and
    n potential lines ``h <i> <h_i>``.  ``#`` starts a comment.  Errors carry
    the 1-based line number.  Positive definiteness is not checked here.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    else:
        data = source.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    lines = _iter_meaningful_lines(text)

    def next_line(expect: str):
        try:
            return next(lines)
        except StopIteration:
            raise ModelFormatError(f"unexpected end of input, expected {expect}") from None

    lineno, header = next_line("header")
    if header != FORMAT_HEADER:
        raise ModelFormatError(f"unsupported header {header!r}, expected {FORMAT_HEADER!r}", lineno)

    lineno, nline = next_line("node count")
    parts = nline.split()
    if len(parts) != 2 or parts[0] != "n":
        raise ModelFormatError(f"expected 'n <nodes>', got {nline!r}", lineno)
    n = _parse_int(parts[1], "node count", lineno)
    if n < 1:
        raise ModelFormatError(f"node count must be positive, got {n}", lineno)

    lineno, mline = next_line("edge count")
    parts = mline.split()
    if len(parts) != 2 or parts[0] != "m":
        raise ModelFormatError(f"expected 'm <edges>', got {mline!r}", lineno)
    m = _parse_int(parts[1], "edge count", lineno)
    if m < 0:
        raise ModelFormatError(f"edge count must be non-negative, got {m}", lineno)

    diag = np.full(n, np.nan)
    h = np.full(n, np.nan)
    edges: list[tuple[int, int, float]] = []
    edge_seen: set[tuple[int, int]] = set()

    def parse_node_index(token: str, lineno: int) -> int:
        i = _parse_int(token, "node index", lineno)
        if not 0 <= i < n:
            raise ModelFormatError(f"node index {i} out of range [0, {n})", lineno)
        return i

    # Sections must arrive in order: all d lines, then e lines, then h lines.
    for count, kind, nfields, what in ((n, "d", 3, "diagonal"), (m, "e", 4, "edge"), (n, "h", 3, "potential")):
        for _ in range(count):
            lineno, line = next_line(f"{what} line")
            parts = line.split()
            if parts[0] != kind or len(parts) != nfields:
                raise ModelFormatError(f"expected {what} line '{kind} ...', got {line!r}", lineno)
            if kind == "d":
                i = parse_node_index(parts[1], lineno)
                if not np.isnan(diag[i]):
                    raise ModelFormatError(f"duplicate diagonal entry for node {i}", lineno)
                v = _parse_float(parts[2], "diagonal value", lineno)
                if v <= 0.0:
                    raise ModelFormatError(f"non-positive diagonal at node {i}", lineno)
                diag[i] = v
            elif kind == "e":
                i = parse_node_index(parts[1], lineno)
                j = parse_node_index(parts[2], lineno)
                if i == j:
                    raise ModelFormatError(f"self edge at node {i}", lineno)
                if i > j:
                    raise ModelFormatError(f"edge indices must satisfy i < j, got ({i}, {j})", lineno)
                if (i, j) in edge_seen:
                    raise ModelFormatError(f"duplicate edge ({i}, {j})", lineno)
                edge_seen.add((i, j))
                edges.append((i, j, _parse_float(parts[3], "edge weight", lineno)))
            else:
                i = parse_node_index(parts[1], lineno)
                if not np.isnan(h[i]):
                    raise ModelFormatError(f"duplicate potential entry for node {i}", lineno)
                h[i] = _parse_float(parts[2], "potential value", lineno)

    for lineno, line in lines:
        raise ModelFormatError(f"unexpected trailing line {line!r}", lineno)
    missing = np.nonzero(np.isnan(diag))[0]
    if missing.size:
        raise ModelFormatError(f"missing diagonal entry for node {int(missing[0])}")
    missing = np.nonzero(np.isnan(h))[0]
    if missing.size:
        raise ModelFormatError(f"missing potential entry for node {int(missing[0])}")

    return GaussianInfoModel(n=n, diag=diag, edges=tuple(edges), h=h)


def _fmt(v: float) -> str:
    # 17 significant digits: enough to round-trip a double exactly.
    return format(float(v), ".17g")


def save_model(model: GaussianInfoModel) -> bytes:
    """Serialize to the ``ggm 1`` text format.

    Output is canonical (ascending node order, edges sorted by (i, j)), so
    structurally equal models produce byte-identical files.
    """
    out = io.StringIO()
    out.write(f"{FORMAT_HEADER}\n")
    out.write(f"n {model.n}\n")
    out.write(f"m {model.m}\n")
    for i in range(model.n):
        out.write(f"d {i} {_fmt(model.diag[i])}\n")
    for i, j, w in model.edges:
        out.write(f"e {i} {j} {_fmt(w)}\n")
    for i in range(model.n):
        out.write(f"h {i} {_fmt(model.h[i])}\n")
    return out.getvalue().encode("utf-8")


def read_model(path: str | os.PathLike) -> GaussianInfoModel:
    with open(path, "rb") as f:
        return load_model(f)


def write_model(model: GaussianInfoModel, path: str | os.PathLike) -> None:
    with open(path, "wb") as f:
        f.write(save_model(model))


# ---------------------------------------------------------------------------
# Normalization and derived views


def require_normalized(model: GaussianInfoModel, op: str) -> None:
    """Raise NotNormalizedError unless the model has an exactly unit diagonal."""
    if not model.is_normalized:
        raise NotNormalizedError(f"{op} requires a unit-diagonal model (run normalize first)")


def normalize(model: GaussianInfoModel) -> tuple[GaussianInfoModel, np.ndarray]:
    """Rescale to unit diagonal: J' = D^-1/2 J D^-1/2 with D = diag(J).

    The potential transforms the same way, h' = D^-1/2 h, so means transform
    as mu' = D^1/2 mu and variances as P'_ii = d_i P_ii.  Returns the new
    model and the scaling vector D^-1/2.  A model that already has a unit
    diagonal is returned unchanged with an all-ones scaling.
    """
    if model.is_normalized:
        return model, np.ones(model.n)
    s = 1.0 / np.sqrt(model.diag)
    edges = tuple((i, j, w * s[i] * s[j]) for i, j, w in model.edges)
    normalized = GaussianInfoModel(
        n=model.n, diag=np.ones(model.n), edges=edges, h=model.h * s
    )
    return normalized, s


def denormalize_solution(
    scaling: np.ndarray, means: np.ndarray, variances: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Map means/variances of the normalized model back to the original scale.

    With s = D^-1/2: mu = s * mu', P_ii = s_i^2 * P'_ii.
    """
    return scaling * means, scaling * scaling * variances


def partial_correlation(model: GaussianInfoModel) -> PartialCorrelation:
    """Walk matrix R = I - J of a unit-diagonal model.

    R has zero diagonal and R_ij = -J_ij off the diagonal.  Also returns
    |R| and its row sums, the inputs to walk-summability diagnostics.
    """
    if not model.is_normalized:
        raise NotNormalizedError("partial_correlation requires a unit-diagonal model")
    ei, ej, ew = model.edge_arrays
    rows = np.concatenate([ei, ej])
    cols = np.concatenate([ej, ei])
    vals = np.concatenate([-ew, -ew])
    r = sp.csr_matrix((vals, (rows, cols)), shape=(model.n, model.n))
    r_abs = sp.csr_matrix((np.abs(vals), (rows, cols)), shape=(model.n, model.n))
    row_sums = np.asarray(r_abs.sum(axis=1)).ravel()
    return PartialCorrelation(r=r, r_abs=r_abs, row_sums=row_sums)


def extract_submodel(
    model: GaussianInfoModel, feedback: Sequence[int]
) -> SubmodelExtract:
    """Split a model by a feedback set F.

    Returns the submodel on T = V - F (reindexed, preserving ascending node
    order) plus, for every p in F, the dense column J_{T,p} used both as an
    extra BP potential and in assembling the feedback system.
    """
    fb: list[int] = []
    fset: set[int] = set()
    for p in feedback:
        p = int(p)
        if not 0 <= p < model.n:
            raise ModelValueError(f"feedback node {p} out of range [0, {model.n})")
        if p in fset:
            raise ModelValueError(f"duplicate feedback node {p}")
        fb.append(p)
        fset.add(p)

    kept = tuple(i for i in range(model.n) if i not in fset)
    pos = {node: idx for idx, node in enumerate(kept)}
    nt = len(kept)

    cross: dict[int, np.ndarray] = {p: np.zeros(nt) for p in fb}
    sub_edges = []
    for i, j, w in model.edges:
        ii, jj = i in fset, j in fset
        if not ii and not jj:
            sub_edges.append((pos[i], pos[j], w))
        elif ii and not jj:
            cross[i][pos[j]] = w
        elif jj and not ii:
            cross[j][pos[i]] = w
        # edges inside F stay in the original model and are read off there

    if nt == 0:
        # Empty remainder: represent it as an explicit empty marker model.
        j_sub = None
    else:
        j_sub = GaussianInfoModel(
            n=nt,
            diag=model.diag[list(kept)],
            edges=tuple(sub_edges),
            h=model.h[list(kept)],
        )
    return SubmodelExtract(
        kept=kept,
        j_sub=j_sub,
        cross_columns=cross,
        feedback=tuple(fb),
        h_f=np.array([model.h[p] for p in fb]),
    )
