"""Command line front end.

Every subcommand reads one config file, assembles its output as a single
string and only then writes it (to --out or stdout), so reruns with the same
config and seed are byte-identical. The first line of every artifact is the
provenance stamp `# config=<digest> seed=<seed>`.

Exit codes: 0 success, 2 malformed config or artifact, 3 enumeration or
allocation budget exceeded, 4 violated mathematical assumption.
"""

from __future__ import annotations

import argparse
import csv
import io
import math
import sys
from typing import Sequence

from . import analysis, codebook, covertness, transforms
from ._budget import budget_cap
from .config import RunConfig, load_config
from .errors import (
    BudgetExceeded,
    ConfigError,
    CovertIdError,
    FormatError,
)
from .params import covert_id_capacity, derive_bounds

__all__ = ["main"]


def _g(x: float) -> str:
    return f"{x:.17g}"


def _tri(flag: bool | None) -> str:
    if flag is None:
        return "unknown"
    return "true" if flag else "false"


def _stamp(cfg: RunConfig, seed: int) -> str:
    return f"# config={cfg.digest} seed={seed}"


def _seed(cfg: RunConfig, args: argparse.Namespace) -> int:
    return cfg.master_seed if args.seed is None else args.seed


def _load_codebook(cfg: RunConfig, args: argparse.Namespace) -> codebook.Codebook:
    path = getattr(args, "codebook", None) or cfg.codebook
    if path is None:
        raise ConfigError("no codebook given (config key 'codebook' or --codebook)")
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return codebook.deserialize(fh.read())
    except OSError as exc:
        raise FormatError(f"cannot read codebook {path!r}: {exc}") from exc


def _csv_text(stamp: str, header: list[str], rows: list[list[str]]) -> str:
    buf = io.StringIO()
    buf.write(stamp + "\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def _cmd_capacity(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    cfg.require("delta")
    value = covert_id_capacity(cp, cfg.delta)
    return f"{_stamp(cfg, _seed(cfg, args))}\ncapacity {value:.9g}\n"


def _cmd_params(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    params = cfg.derive(cp)
    bounds = derive_bounds(params, cp, cfg.m_size, cfg.n_seq)
    lines = [_stamp(cfg, _seed(cfg, args))]
    for key in ("n", "l", "w", "s"):
        lines.append(f"{key} {getattr(params, key)}")
    for key in (
        "delta", "t", "eta", "eps", "r_rate", "r_prime", "gamma", "mu_slack",
        "tau", "threshold", "n_seq_theory", "m_theory_log_log",
    ):
        lines.append(f"{key} {_g(getattr(params, key))}")
    lines.append(f"capacity {_g(covert_id_capacity(cp, params.delta))}")
    for key in (
        "beta_n", "alpha_n", "beta_prime_n", "alpha_prime_n",
        "c1_explicit", "c4_explicit", "ppm_term_budget", "code_term_bound",
    ):
        lines.append(f"{key} {_g(getattr(bounds, key))}")
    return "\n".join(lines) + "\n"


def _cmd_gen(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    params = cfg.derive(cp)
    seed = _seed(cfg, args)
    cb = codebook.generate(params, cfg.m_size, cfg.n_seq, seed)
    return codebook.serialize(cb, comment=f"config={cfg.digest} seed={seed}")


def _cmd_sim(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    cb = _load_codebook(cfg, args)
    seed = _seed(cfg, args)
    ests = analysis.run_estimates(
        cb, cp, cfg.trials, cfg.pair_budget, seed, workers=args.workers
    )
    rows = [analysis.csv_row(e) for e in ests]
    return _csv_text(_stamp(cfg, seed), analysis.CSV_HEADER, rows)


def _cmd_covert(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    cfg.require("delta")
    cb = _load_codebook(cfg, args)
    seed = _seed(cfg, args)
    rep = covertness.covertness_report(
        cb, cp, cfg.delta, trials=cfg.trials, seed=seed, workers=args.workers
    )
    lines = [
        _stamp(cfg, seed),
        f"term_ppm_vs_innocent {_g(rep.term_ppm_vs_innocent)}",
        f"term_code_vs_ppm {_g(rep.term_code_vs_ppm)}",
        f"term_cross {_g(rep.term_cross)}",
        f"total_or_bound {_g(rep.total_or_bound)}",
        f"delta {_g(rep.delta)}",
        f"satisfied {_tri(rep.satisfied)}",
        f"flag_code_vs_ppm {rep.flag_code_vs_ppm}",
        f"flag_cross {rep.flag_cross}",
        f"term2_ci95 {_g(rep.term2_ci95)}",
        f"ppm_term_budget {_g(rep.ppm_term_budget)}",
        f"ppm_term_ok {_tri(rep.ppm_term_ok)}",
    ]
    return "\n".join(lines) + "\n"


def _p3_per_message(
    cb: codebook.Codebook, cp, trials: int, seed: int
) -> dict[int, float]:
    exact = len(cp.p0) ** cb.n <= budget_cap()
    out = {}
    for m in range(cb.m_size):
        if exact:
            out[m] = analysis.exact_p(cb, cp, "third", m)
        else:
            out[m] = analysis.estimate_p3(cb, cp, m, trials, seed).point
    return out


def _cmd_refine(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    cb = _load_codebook(cfg, args)
    seed = _seed(cfg, args)
    p3 = _p3_per_message(cb, cp, cfg.trials, seed)
    refined, rep = transforms.refine(cb, p3, cfg.eps3)
    comment = (
        f"config={cfg.digest} seed={seed}\n"
        f"refine eps3={_g(rep.eps3)} gate={_g(math.sqrt(rep.eps3))} "
        f"good={len(rep.good_set)} bad={len(rep.bad_set)} nu_n={_g(rep.nu_n)}"
    )
    return codebook.serialize(refined, comment=comment)


def _cmd_expurgate(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    cfg.require("delta")
    cb = _load_codebook(cfg, args)
    seed = _seed(cfg, args)
    summary = analysis.summarize(
        cb, cp, cfg.trials, cfg.pair_budget, seed, workers=args.workers
    )
    out, rep = transforms.expurgate(
        cb, cp, cfg.delta, cfg.c5, summary.max_p1, summary.max_p2_sampled
    )
    comment = (
        f"config={cfg.digest} seed={seed}\n"
        f"expurgate k={_g(rep.k)} psi={_g(rep.psi)} lambda_n={_g(rep.lambda_n)} "
        f"eps_n={_g(rep.eps_n)} kappa_n={_g(rep.kappa_n)} "
        f"weight_cap={_g(rep.weight_cap)} kept={len(rep.kept)}"
    )
    return codebook.serialize(out, comment=comment)


def _cmd_resolve(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    cb = _load_codebook(cfg, args)
    seed = _seed(cfg, args)
    atoms, weights = cb.codeword(0)
    zetas = cfg.zeta_values
    if not zetas:
        base = max(len(pos) for pos in atoms) * cp.d_p
        zetas = tuple(f * base for f in (0.25, 0.5, 0.75, 1.0, 1.25))
    max_q = max(len(pos) for pos in atoms)
    rows = []
    for K in cfg.k_values:
        for zeta in zetas:
            mean_tv, bound, tail, _ = transforms.mean_soft_cover_gap(
                atoms, weights, K, cp, cb.n, zeta, cfg.resamples, seed
            )
            rows.append([
                str(K), _g(zeta), _g(zeta - max_q * cp.d_p), _g(mean_tv),
                _g(tail), _g(bound), "exact", str(cfg.resamples),
            ])
    header = ["K", "zeta", "upsilon", "mean_tv", "prob_term", "bound_rhs", "flag", "resamples"]
    return _csv_text(_stamp(cfg, seed), header, rows)


def _cmd_sweep(cfg: RunConfig, args: argparse.Namespace) -> str:
    cp = cfg.channel_pair()
    if bool(cfg.sweep_n) == bool(cfg.sweep_delta):
        raise ConfigError("sweep needs exactly one of sweep_n, sweep_delta")
    if cfg.sweep_n:
        cfg.require("delta")
        points = [(n, cfg.delta) for n in cfg.sweep_n]
    else:
        cfg.require("n")
        points = [(cfg.n, d) for d in cfg.sweep_delta]
    header = [
        "n", "delta", "l", "t", "w", "s", "r_rate", "r_prime", "gamma",
        "mu_slack", "tau", "threshold", "capacity", "beta_n", "alpha_n",
        "beta_prime_n", "alpha_prime_n", "c1_explicit", "c4_explicit",
        "ppm_term_budget", "code_term_bound",
    ]
    rows = []
    for n, delta in points:
        params = cfg.derive(cp, n=n, delta=delta)
        bounds = derive_bounds(params, cp, cfg.m_size, cfg.n_seq)
        rows.append([
            str(n), _g(delta), str(params.l), _g(params.t), str(params.w),
            str(params.s), _g(params.r_rate), _g(params.r_prime),
            _g(params.gamma), _g(params.mu_slack), _g(params.tau),
            _g(params.threshold), _g(covert_id_capacity(cp, delta)),
            _g(bounds.beta_n), _g(bounds.alpha_n), _g(bounds.beta_prime_n),
            _g(bounds.alpha_prime_n), _g(bounds.c1_explicit),
            _g(bounds.c4_explicit), _g(bounds.ppm_term_budget), _g(bounds.code_term_bound),
        ])
    return _csv_text(_stamp(cfg, _seed(cfg, args)), header, rows)


_COMMANDS = {
    "capacity": _cmd_capacity,
    "params": _cmd_params,
    "gen": _cmd_gen,
    "sim": _cmd_sim,
    "covert": _cmd_covert,
    "refine": _cmd_refine,
    "expurgate": _cmd_expurgate,
    "resolve": _cmd_resolve,
    "sweep": _cmd_sweep,
}

_NEEDS_CODEBOOK = {"sim", "covert", "refine", "expurgate", "resolve"}


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="covertid",
        description="Desk-scale laboratory for covert identification codes.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    help_text = {
        "capacity": "print the covert identification capacity",
        "params": "print the derived parameter ledger and bound ledger",
        "gen": "generate a codebook artifact",
        "sim": "estimate all three error kinds (CSV)",
        "covert": "evaluate the covertness decomposition",
        "refine": "drop high third-kind-error messages, recycle constituents",
        "expurgate": "keep light messages, truncate heavy atoms",
        "resolve": "soft-covering gap of K-type approximations (CSV)",
        "sweep": "parameter/bound ledgers over a grid of n or delta (CSV)",
    }
    for name, fn in _COMMANDS.items():
        p = sub.add_parser(name, help=help_text[name])
        p.add_argument("--config", required=True, help="path to the run config")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--workers", type=int, default=1, help="thread count")
        p.add_argument("--out", default=None, help="output path (default stdout)")
        if name in _NEEDS_CODEBOOK:
            p.add_argument(
                "--codebook", default=None,
                help="codebook artifact (overrides the config key)",
            )
        p.set_defaults(fn=fn)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        text = args.fn(cfg, args)
    except (ConfigError, FormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except CovertIdError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    if args.out is None:
        sys.stdout.write(text)
    else:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
