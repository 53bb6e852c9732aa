"""Identification codebooks: stochastic codewords over PPM constituents,
union-of-score-regions demapping, and the text artifact format.

A codeword is a law over constituent sequences. Freshly generated codebooks
are uniform over n_seq PPM sequences per message; refinement appends atoms
(indices >= n_seq) and expurgation zero-weights atoms in place. The
demapping region of message m is always defined by its first n_seq atoms,
regardless of weights, so transforms leave decoding regions untouched.

Text format, one header line then one line per atom:

    covertid v1 n=<n> l=<l> w=<w> s=<s> M=<m> N=<n> thr=<17 sig digits> seed=<u64>
    m i o_1 ... o_l [weight]

Offsets are base-10 block offsets; the optional trailing weight is a
17-significant-digit decimal (round-trips float64 exactly). Lines starting
with '#' are comments. Only PPM-shaped atoms are expressible in the format;
generic supports exist in memory only.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._budget import check_budget
from ._rng import stream
from .channels import ChannelPair
from .errors import AssumptionViolated, FormatError, InfiniteLLR, UnknownMessage
from .params import CovertParams

__all__ = [
    "Codebook",
    "DemapVerdict",
    "generate",
    "demap",
    "serialize",
    "deserialize",
    "pooled_atoms",
    "multiset_fingerprint",
]

_WEIGHT_TOL = 1e-12


@dataclass(frozen=True)
class DemapVerdict:
    accepted: bool
    best_score: float
    arg_index: int


class Codebook:
    """In-memory code. atoms[m] is a list of sorted one-position arrays;
    weights[m] is None for a uniform codeword, else a probability vector
    over atoms[m]. n_seq is the number of demap-defining atoms."""

    def __init__(
        self,
        n: int,
        l: int,
        w: int,
        s: int,
        m_size: int,
        n_seq: int,
        threshold: float,
        master_seed: int,
        atoms: list[list[np.ndarray]],
        weights: list[np.ndarray | None],
        params: CovertParams | None = None,
    ):
        if w < 1 or l < 1 or s < 0 or n != w * l + s:
            raise AssumptionViolated(f"bad geometry n={n}, l={l}, w={w}, s={s}")
        if m_size < 1 or m_size != len(atoms) or m_size != len(weights):
            raise AssumptionViolated("m_size does not match the atom table")
        if n_seq < 1:
            raise AssumptionViolated(f"n_seq must be >= 1, got {n_seq}")
        for m in range(m_size):
            if len(atoms[m]) < n_seq:
                raise AssumptionViolated(
                    f"message {m} has {len(atoms[m])} atoms < n_seq = {n_seq}"
                )
            wm = weights[m]
            if wm is not None:
                if len(wm) != len(atoms[m]):
                    raise AssumptionViolated(f"message {m}: weight/atom length mismatch")
                if np.any(wm < 0.0):
                    raise AssumptionViolated(f"message {m}: negative weight")
                if abs(float(wm.sum()) - 1.0) > _WEIGHT_TOL:
                    raise AssumptionViolated(f"message {m}: weights sum to {wm.sum()!r}")
            for arr in atoms[m]:
                if len(arr) and (arr[0] < 0 or arr[-1] >= n):
                    raise AssumptionViolated("atom position outside [0, n)")
        self.n = n
        self.l = l
        self.w = w
        self.s = s
        self.m_size = m_size
        self.n_seq = n_seq
        self.threshold = threshold
        self.master_seed = master_seed
        self.atoms = atoms
        self.weights = weights
        self.params = params
        self._ppm_cache: dict[tuple[int, bool], np.ndarray | None] = {}

    def codeword(self, m: int) -> tuple[list[np.ndarray], np.ndarray]:
        """Atom list and effective weights (uniform when stored as None)."""
        self._check_m(m)
        wm = self.weights[m]
        if wm is None:
            k = len(self.atoms[m])
            wm = np.full(k, 1.0 / k)
        return self.atoms[m], wm

    def ppm_offsets(self, m: int, defining_only: bool = False) -> np.ndarray | None:
        """(k, l) matrix of block offsets when every requested atom is
        PPM-shaped, else None. Cached."""
        self._check_m(m)
        key = (m, defining_only)
        if key not in self._ppm_cache:
            atoms = self.atoms[m][: self.n_seq] if defining_only else self.atoms[m]
            self._ppm_cache[key] = self._to_offsets(atoms)
        return self._ppm_cache[key]

    def _to_offsets(self, atoms: list[np.ndarray]) -> np.ndarray | None:
        out = np.empty((len(atoms), self.l), dtype=np.int64)
        for i, pos in enumerate(atoms):
            if len(pos) != self.l or (len(pos) and pos[-1] >= self.w * self.l):
                return None
            blocks = pos // self.w
            if not np.array_equal(blocks, np.arange(self.l)):
                return None
            out[i] = pos - blocks * self.w
        return out

    def _check_m(self, m: int) -> None:
        if not 0 <= m < self.m_size:
            raise UnknownMessage(f"message {m} outside [0, {self.m_size})")


def generate(
    params: CovertParams, m_size: int, n_seq: int, master_seed: int
) -> Codebook:
    """All constituents i.i.d. PPM, one counter-derived stream per (m, i):
    regeneration is bit-identical and independent of worker count."""
    if m_size < 1 or n_seq < 1:
        raise AssumptionViolated("m_size and n_seq must be >= 1")
    check_budget(m_size * n_seq * params.l, "codebook offsets")
    block_base = np.arange(params.l, dtype=np.int64) * params.w
    atoms: list[list[np.ndarray]] = []
    for m in range(m_size):
        rows = []
        for i in range(n_seq):
            gen = stream(master_seed, "gen", m, i)
            offs = gen.integers(0, params.w, size=params.l, dtype=np.int64)
            rows.append(offs + block_base)
        atoms.append(rows)
    return Codebook(
        n=params.n,
        l=params.l,
        w=params.w,
        s=params.s,
        m_size=m_size,
        n_seq=n_seq,
        threshold=params.threshold,
        master_seed=master_seed,
        atoms=atoms,
        weights=[None] * m_size,
        params=params,
    )


def demap(cb: Codebook, cp: ChannelPair, m: int, y: Sequence[int] | np.ndarray) -> DemapVerdict:
    """Score y against the defining atoms of m; accept iff the best score
    strictly exceeds the threshold."""
    cb._check_m(m)
    y_arr = np.asarray(y, dtype=np.int64)
    if y_arr.shape != (cb.n,):
        raise AssumptionViolated(f"y must have length {cb.n}")
    llr = cp.llr_y_arr()
    best = -math.inf
    arg = 0
    for i, pos in enumerate(cb.atoms[m][: cb.n_seq]):
        vals = llr[y_arr[pos]]
        if np.isposinf(vals).any():
            raise InfiniteLLR("demap score addend is +inf")
        score = float(vals.sum())
        if score > best:
            best = score
            arg = i
    return DemapVerdict(accepted=best > cb.threshold, best_score=best, arg_index=arg)


def serialize(cb: Codebook, comment: str | None = None) -> str:
    lines = [
        f"covertid v1 n={cb.n} l={cb.l} w={cb.w} s={cb.s} "
        f"M={cb.m_size} N={cb.n_seq} thr={cb.threshold:.17g} seed={cb.master_seed}"
    ]
    if comment:
        lines.extend(f"# {part}" for part in comment.splitlines())
    for m in range(cb.m_size):
        offsets = cb.ppm_offsets(m)
        if offsets is None:
            raise FormatError(f"message {m} has non-PPM atoms; not expressible")
        wm = cb.weights[m]
        for i in range(len(cb.atoms[m])):
            cells = [str(m), str(i)] + [str(int(o)) for o in offsets[i]]
            if wm is not None:
                cells.append(f"{wm[i]:.17g}")
            lines.append(" ".join(cells))
    return "\n".join(lines) + "\n"


def _parse_header(line: str) -> dict[str, str]:
    parts = line.split()
    if len(parts) != 10 or parts[0] != "covertid" or parts[1] != "v1":
        raise FormatError("expected 'covertid v1' header with 8 fields", line=1)
    fields = {}
    for part in parts[2:]:
        key, _, val = part.partition("=")
        if not val:
            raise FormatError(f"malformed header field {part!r}", line=1)
        fields[key] = val
    expected = {"n", "l", "w", "s", "M", "N", "thr", "seed"}
    if set(fields) != expected:
        raise FormatError(f"header fields {sorted(fields)} != {sorted(expected)}", line=1)
    return fields


def deserialize(text: str) -> Codebook:
    lines = text.splitlines()
    if not lines:
        raise FormatError("empty input", line=1)
    hdr = _parse_header(lines[0])
    try:
        n, l, w, s = (int(hdr[k]) for k in ("n", "l", "w", "s"))
        m_size, n_seq = int(hdr["M"]), int(hdr["N"])
        threshold = float(hdr["thr"])
        seed = int(hdr["seed"])
    except ValueError as exc:
        raise FormatError(f"non-numeric header field: {exc}", line=1) from exc
    if n != w * l + s:
        raise FormatError(f"header geometry n={n} != w*l+s={w * l + s}", line=1)
    if m_size < 1:
        raise FormatError("m_size must be >= 1", line=1)

    rows: dict[int, dict[int, tuple[np.ndarray, float | None]]] = {}
    block_base = np.arange(l, dtype=np.int64) * w
    for lineno, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        cells = line.split()
        if len(cells) == 2 + l:
            weight = None
        elif len(cells) == 3 + l:
            try:
                weight = float(cells[-1])
            except ValueError as exc:
                raise FormatError(f"bad weight {cells[-1]!r}", line=lineno) from exc
        else:
            raise FormatError(
                f"expected {2 + l} or {3 + l} fields, got {len(cells)}", line=lineno
            )
        try:
            m = int(cells[0])
            i = int(cells[1])
            offs = np.array([int(c) for c in cells[2 : 2 + l]], dtype=np.int64)
        except ValueError as exc:
            raise FormatError(f"non-integer field: {exc}", line=lineno) from exc
        if not 0 <= m < m_size:
            raise FormatError(f"message {m} outside [0, {m_size})", line=lineno)
        if i < 0:
            raise FormatError(f"negative atom index {i}", line=lineno)
        if np.any(offs < 0) or np.any(offs >= w):
            raise FormatError(f"offset outside [0, {w})", line=lineno)
        per_m = rows.setdefault(m, {})
        if i in per_m:
            raise FormatError(f"duplicate atom ({m}, {i})", line=lineno)
        per_m[i] = (offs + block_base, weight)

    atoms: list[list[np.ndarray]] = []
    weights: list[np.ndarray | None] = []
    for m in range(m_size):
        per_m = rows.get(m)
        if per_m is None:
            raise FormatError(f"message {m} has no atoms")
        if sorted(per_m) != list(range(len(per_m))):
            raise FormatError(f"message {m}: atom indices not contiguous from 0")
        seqs = [per_m[i][0] for i in range(len(per_m))]
        wvals = [per_m[i][1] for i in range(len(per_m))]
        if all(v is None for v in wvals):
            weights.append(None)
        elif any(v is None for v in wvals):
            raise FormatError(f"message {m} mixes weighted and weightless atoms")
        else:
            weights.append(np.array(wvals, dtype=np.float64))
        atoms.append(seqs)

    try:
        return Codebook(
            n=n, l=l, w=w, s=s, m_size=m_size, n_seq=n_seq,
            threshold=threshold, master_seed=seed, atoms=atoms, weights=weights,
        )
    except AssumptionViolated as exc:
        raise FormatError(str(exc)) from exc


def pooled_atoms(cb: Codebook) -> list[tuple[int, ...]]:
    """The pooled multiset of constituent sequences across all messages,
    as a sorted list of one-position tuples."""
    pool = [tuple(int(p) for p in arr) for m in range(cb.m_size) for arr in cb.atoms[m]]
    pool.sort()
    return pool


def multiset_fingerprint(cb: Codebook) -> str:
    """sha256 over the pooled sorted constituent multiset."""
    h = hashlib.sha256()
    for atom in pooled_atoms(cb):
        h.update(repr(atom).encode())
        h.update(b";")
    return h.hexdigest()
