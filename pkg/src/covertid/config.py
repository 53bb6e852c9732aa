"""Plain-text run configuration.

One `key = value` pair per line, `#` starts a comment line, blank lines are
skipped. Unknown or duplicate keys are errors that carry the line number.
Channel rows are given either explicitly (p0/p1/q0/q1 as comma-separated
probability vectors) or through the binary-symmetric shortcuts bsc_y/bsc_z
(crossover probabilities); mixing both forms for the same channel is an
error.

The config digest (first 12 hex chars of the sha256 of the raw file text)
is stamped into every artifact the command line writes, so outputs can be
traced back to their exact inputs.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from typing import Callable

from .channels import ChannelPair, Dist, bsc_rows, validate_channel_pair
from .errors import ConfigError, SlacknessOutOfRange
from .params import CovertParams, derive_params

__all__ = ["RunConfig", "parse_config", "load_config", "auto_mu_slack"]


def _as_int(raw: str) -> int:
    return int(raw, 10)


def _as_float(raw: str) -> float:
    return float(raw)


def _as_floats(raw: str) -> tuple[float, ...]:
    return tuple(float(part) for part in raw.split(","))


def _as_ints(raw: str) -> tuple[int, ...]:
    return tuple(int(part, 10) for part in raw.split(","))


_SCHEMA: dict[str, Callable[[str], object]] = {
    "p0": _as_floats,
    "p1": _as_floats,
    "q0": _as_floats,
    "q1": _as_floats,
    "bsc_y": _as_float,
    "bsc_z": _as_float,
    "n": _as_int,
    "delta": _as_float,
    "eta": _as_float,
    "eps": _as_float,
    "mu_slack": _as_float,
    "c5": _as_float,
    "m_size": _as_int,
    "n_seq": _as_int,
    "trials": _as_int,
    "pair_budget": _as_int,
    "master_seed": _as_int,
    "eps3": _as_float,
    "resamples": _as_int,
    "k_values": _as_ints,
    "zeta_values": _as_floats,
    "sweep_n": _as_ints,
    "sweep_delta": _as_floats,
    "codebook": str,
}


@dataclass(frozen=True)
class RunConfig:
    digest: str
    p0: tuple[float, ...] | None = None
    p1: tuple[float, ...] | None = None
    q0: tuple[float, ...] | None = None
    q1: tuple[float, ...] | None = None
    n: int | None = None
    delta: float | None = None
    eta: float = 0.2
    eps: float = 0.05
    mu_slack: float | None = None
    c5: float = 0.0
    m_size: int = 8
    n_seq: int = 32
    trials: int = 1000
    pair_budget: int = 4096
    master_seed: int = 0
    eps3: float = 0.01
    resamples: int = 1000
    k_values: tuple[int, ...] = (4, 16, 64)
    zeta_values: tuple[float, ...] = ()
    sweep_n: tuple[int, ...] = ()
    sweep_delta: tuple[float, ...] = ()
    codebook: str | None = None

    def channel_pair(self) -> ChannelPair:
        missing = [k for k in ("p0", "p1", "q0", "q1") if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"channel rows missing: {', '.join(missing)}")
        return validate_channel_pair(
            Dist(self.p0), Dist(self.p1), Dist(self.q0), Dist(self.q1)
        )

    def require(self, *keys: str) -> None:
        missing = [k for k in keys if getattr(self, k) is None]
        if missing:
            raise ConfigError(f"config keys required here: {', '.join(missing)}")

    def derive(self, cp: ChannelPair, n: int | None = None, delta: float | None = None) -> CovertParams:
        """Parameter ledger at (n, delta), defaulting to the config values;
        mu_slack defaults to the midpoint of its admissible window."""
        n = self.n if n is None else n
        delta = self.delta if delta is None else delta
        if n is None or delta is None:
            raise ConfigError("config keys required here: n, delta")
        mu = self.mu_slack
        if mu is None:
            mu = auto_mu_slack(cp, n, delta, self.eta, self.eps)
        return derive_params(cp, n, delta, self.eta, self.eps, mu)


def auto_mu_slack(cp: ChannelPair, n: int, delta: float, eta: float, eps: float) -> float:
    """Midpoint of the admissible mu window (0, (eta/2 - eps) * t * d_p)."""
    probe = 2.0 * delta - float(n) ** (-1.0 / 3.0)
    if n < 1 or probe <= 0.0:
        raise SlacknessOutOfRange(f"no admissible mu window at n={n}, delta={delta}")
    l = math.floor(math.sqrt(probe * n / cp.chi2_q))
    cap = (eta / 2.0 - eps) * (l / math.sqrt(n)) * cp.d_p
    if cap <= 0.0:
        raise SlacknessOutOfRange(f"no admissible mu window at n={n}, delta={delta}")
    return cap / 2.0


def parse_config(text: str) -> RunConfig:
    digest = hashlib.sha256(text.encode()).hexdigest()[:12]
    values: dict[str, object] = {}
    where: dict[str, int] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, val = line.partition("=")
        key = key.strip()
        val = val.strip()
        if not sep or not key:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        if key not in _SCHEMA:
            raise ConfigError(f"unknown key {key!r}", line=lineno)
        if key in values:
            raise ConfigError(f"duplicate key {key!r} (first on line {where[key]})", line=lineno)
        if not val:
            raise ConfigError(f"empty value for {key!r}", line=lineno)
        try:
            values[key] = _SCHEMA[key](val)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", line=lineno) from exc
        where[key] = lineno

    for side, rows in (("bsc_y", ("p0", "p1")), ("bsc_z", ("q0", "q1"))):
        if side in values:
            clash = [k for k in rows if k in values]
            if clash:
                raise ConfigError(
                    f"{side} conflicts with explicit rows {', '.join(clash)}",
                    line=where[side],
                )
            crossover = values.pop(side)
            if not 0.0 <= crossover <= 1.0:
                raise ConfigError(
                    f"{side} must lie in [0,1], got {crossover}", line=where[side]
                )
            lo, hi = bsc_rows(crossover)
            values[rows[0]] = lo.probs
            values[rows[1]] = hi.probs

    return RunConfig(digest=digest, **values)


def load_config(path: str) -> RunConfig:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from exc
