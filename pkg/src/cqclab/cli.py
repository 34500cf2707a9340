"""Command-line front end: capacity solves, grid sweeps, simulations, and
property validation, all emitted as comment-headed CSV.

Every run echoes its effective configuration (command, parameters, seed)
into the output header; identical headers imply byte-identical bodies.
Exit codes: 0 success, 1 validation failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys

import numpy as np

from . import __version__
from .capacity2 import solve_capacity_2user, solve_on_alpha_slice
from .capacity3 import i_tilde_curve, solve_capacity_3user, validate_i_concavity
from .coding import (
    ProbeTemplate,
    build_codebook_2user,
    build_codebook_3user,
    probe_stream,
    run_transmission,
)
from .dist import entropy, h_tilde, solve_tilt
from .fcfs import (
    BACKGROUND,
    DECODER,
    ENCODER,
    ArrivalSchedule,
    simulate,
    stability_probe,
    trace_to_csv_rows,
)


def _fmt(x) -> str:
    if isinstance(x, float):
        return f"{x:.12g}"
    return str(x)


def _emit(args, header_cfg: dict, lines: list[str]):
    out = [
        f"# tool=cqclab version={__version__}",
        f"# command={args.command}",
        f"# config={json.dumps(header_cfg, sort_keys=True)}",
        f"# seed={args.seed}",
    ] + lines
    text = "\n".join(out) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _parse_floats(text: str) -> list[float]:
    return [float(t) for t in text.split(",") if t.strip() != ""]


def _parse_ints(text: str) -> list[int]:
    return [int(t) for t in text.split(",") if t.strip() != ""]


def cmd_htilde(args) -> int:
    ks = _parse_ints(args.k_set)
    step = args.gamma_step
    if step <= 0 or step >= 1 or any(k < 1 for k in ks):
        print("invalid gamma step or k set", file=sys.stderr)
        return 2
    gammas = np.arange(step, 1.0, step)
    lines = ["gamma,k,h_tilde"]
    for k in ks:
        for g in gammas:
            lines.append(f"{_fmt(float(g))},{k},{_fmt(h_tilde(float(g), k).bits_per_slot)}")
    _emit(args, {"gamma_step": step, "k_set": ks}, lines)
    return 0


def cmd_capacity2(args) -> int:
    tol = args.tolerance if args.tolerance is not None else 1e-6
    if args.alpha_fixed is not None:
        res = solve_on_alpha_slice(args.alpha_fixed, tolerance=tol)
    else:
        res = solve_capacity_2user(tolerance=tol)
    print(
        f"two-user capacity: {res.capacity_bits_per_slot:.4f} bits/slot "
        f"(alpha={res.alpha:.4f}, gamma1={res.gamma1:.4f}, gamma2={res.gamma2:.4f})"
    )
    lines = [
        "capacity,alpha,gamma1,gamma2,constraint_residual",
        ",".join(
            _fmt(v)
            for v in (
                res.capacity_bits_per_slot,
                res.alpha,
                res.gamma1,
                res.gamma2,
                res.constraint_residual,
            )
        ),
    ]
    _emit(args, {"tolerance": tol, "alpha_fixed": args.alpha_fixed}, lines)
    return 0


def cmd_capacity3(args) -> int:
    rps = _parse_floats(args.rp_grid)
    if any(not 0 <= r < 1 for r in rps):
        print("background rates must lie in [0, 1)", file=sys.stderr)
        return 2
    if args.itilde:
        ks = _parse_ints(args.k_set)
        gammas = np.arange(args.gamma_step, 1.0, args.gamma_step)
        lines = ["gamma,k,r_p,i_tilde"]
        for rp in rps:
            for k in ks:
                for g, val in zip(gammas, i_tilde_curve(gammas, k, rp)):
                    lines.append(f"{_fmt(float(g))},{k},{_fmt(rp)},{_fmt(float(val))}")
        cfg = {"rp_grid": rps, "k_set": ks, "gamma_step": args.gamma_step, "itilde": True}
        _emit(args, cfg, lines)
        return 0
    lines = ["r_p,capacity,alpha,gamma1,gamma2,tau_star"]
    for rp in rps:
        res = solve_capacity_3user(rp, tau_max=args.tau_max)
        lines.append(
            ",".join(
                _fmt(v)
                for v in (
                    rp,
                    res.capacity_bits_per_slot,
                    res.alpha,
                    res.gamma1,
                    res.gamma2,
                    res.tau_star,
                )
            )
        )
    _emit(args, {"rp_grid": rps, "tau_max": args.tau_max}, lines)
    return 0


def cmd_simulate(args) -> int:
    if args.users == 2:
        cb = build_codebook_2user(args.n, args.M, delta=args.delta, seed=args.seed)
        background = None
    else:
        if args.rp is None:
            print("three-user simulation needs --rp", file=sys.stderr)
            return 2
        cb = build_codebook_3user(
            args.n, args.M, args.rp, tau_max=args.tau_max, delta=args.delta, seed=args.seed
        )
        background = args.rp
    report = run_transmission(
        cb,
        background_rate=background,
        trials=args.trials,
        seed=args.seed,
        initial_backlog=args.backlog,
    )
    print(
        f"{args.trials} trials at rate {report.empirical_rate_bits_per_slot:.4f} "
        f"bits/slot: {report.errors} errors "
        f"(rate {report.empirical_error_rate:.4f})"
    )
    lines = [
        "messages_sent,errors,empirical_error_rate,empirical_rate_bits_per_slot,seed",
        ",".join(
            _fmt(v)
            for v in (
                report.messages_sent,
                report.errors,
                report.empirical_error_rate,
                report.empirical_rate_bits_per_slot,
                report.seed,
            )
        ),
    ]
    cfg = {
        "users": args.users,
        "n": args.n,
        "M": args.M,
        "trials": args.trials,
        "rp": args.rp,
        "delta": args.delta,
        "backlog": args.backlog,
    }
    _emit(args, cfg, lines)
    if args.trace:
        rng = np.random.default_rng(args.seed)
        msg = int(rng.integers(cb.M))
        probe_full = np.append(
            probe_stream(ProbeTemplate.for_codebook(cb)).slots, np.int8(1)
        )
        decoder = ArrivalSchedule(DECODER, probe_full)
        encoder = ArrivalSchedule(ENCODER, np.append(cb.codewords[msg], np.int8(0)))
        bg = None
        if background is not None:
            bg = ArrivalSchedule.bernoulli(BACKGROUND, background, cb.n + 1, rng)
        backlog = args.backlog if args.backlog is not None else cb.n + cb.tau_star + 1
        trace = simulate(decoder, encoder, bg, initial_backlog=backlog)
        rows = trace_to_csv_rows(trace, decoder, encoder, bg)
        with open(args.trace, "w") as fh:
            fh.write(f"# tool=cqclab version={__version__}\n")
            fh.write(f"# command=simulate-trace message={msg} seed={args.seed}\n")
            fh.write("slot,arrivals_by_user,served_owner,queue_len\n")
            for slot, arr, srv, q in rows:
                fh.write(f"{slot},{arr},{srv},{q}\n")
    return 0


def cmd_stability(args) -> int:
    rates = _parse_floats(args.rates)
    report = stability_probe(rates, args.horizon, seed=args.seed)
    drift = "n/a" if report.drift_above_threshold is None else f"{report.drift_above_threshold:.4f}"
    thr = "n/a" if report.drift_threshold is None else f"{report.drift_threshold:.4f}"
    print(
        f"total rate {report.total_rate:.3f} over {report.horizon} slots: "
        f"final queue {report.final_queue}, max {report.max_queue}, "
        f"second-half mean {report.mean_queue_second_half:.2f}, "
        f"drift above threshold {thr}: {drift}"
    )
    lines = [
        "total_rate,horizon,final_queue,max_queue,mean_queue_second_half,"
        "squared_increment_mean,drift_threshold,drift_above_threshold,slots_above_threshold",
        ",".join(
            _fmt(v if v is not None else float("nan"))
            for v in (
                report.total_rate,
                report.horizon,
                report.final_queue,
                report.max_queue,
                report.mean_queue_second_half,
                report.squared_increment_mean,
                report.drift_threshold,
                report.drift_above_threshold,
                report.slots_above_threshold,
            )
        ),
    ]
    _emit(args, {"rates": rates, "horizon": args.horizon}, lines)
    return 0


def cmd_validate(args) -> int:
    rng = np.random.default_rng(args.seed)
    tol_dual = args.tolerance if args.tolerance is not None else 1e-9
    tol_sym = args.tolerance if args.tolerance is not None else 1e-10
    tol_conc = args.tolerance if args.tolerance is not None else 1e-9
    tol_mix = args.tolerance if args.tolerance is not None else 1e-6

    # dual-formula equivalence of the entropy ceiling
    worst_dual = 0.0
    for k in range(1, 9):
        for g in np.arange(0.01, 1.0, 0.01):
            via_rate = h_tilde(float(g), k).bits_per_slot
            via_tilt = entropy(solve_tilt(k, k * float(g)).pmf) / k
            worst_dual = max(worst_dual, abs(via_rate - via_tilt))

    # mirror symmetry of the entropy ceiling
    worst_sym = 0.0
    for k in range(1, 9):
        for g in np.arange(0.01, 0.5, 0.01):
            worst_sym = max(
                worst_sym,
                abs(h_tilde(float(g), k).bits_per_slot - h_tilde(1 - float(g), k).bits_per_slot),
            )

    # concavity of the entropy ceiling in (gamma, 1/k)
    worst_conc = math.inf
    for _ in range(max(args.samples * 4, 100)):
        k1 = int(rng.integers(1, 9))
        k3 = int(rng.integers(1, 9))
        klo, khi = min(k1, k3), max(k1, k3)
        k2 = int(rng.integers(klo, khi + 1))
        if k1 == k3:
            a = float(rng.uniform())
        else:
            a = (1.0 / k2 - 1.0 / k3) / (1.0 / k1 - 1.0 / k3)
        g1, g3 = rng.uniform(size=2)
        g2 = a * g1 + (1 - a) * g3
        lhs = (
            a * h_tilde(float(g1), k1).bits_per_slot
            + (1 - a) * h_tilde(float(g3), k3).bits_per_slot
        )
        worst_conc = min(worst_conc, h_tilde(float(g2), k2).bits_per_slot - lhs)

    # mixed-window concavity of the noisy ceiling
    report = validate_i_concavity(
        tau_max=args.tau_max,
        samples=args.samples,
        seed=args.seed,
        tolerance=tol_mix,
    )

    lines = [
        "check,worst_margin,tolerance",
        f"dual_formula,{_fmt(worst_dual)},{_fmt(tol_dual)}",
        f"symmetry,{_fmt(worst_sym)},{_fmt(tol_sym)}",
        f"h_tilde_concavity,{_fmt(worst_conc)},{_fmt(-tol_conc)}",
        f"mixed_window_concavity,{_fmt(report.worst_margin)},{_fmt(-tol_mix)}",
    ]
    cfg = {"tau_max": args.tau_max, "samples": args.samples}
    _emit(args, cfg, lines)
    ok = (
        worst_dual <= tol_dual
        and worst_sym <= tol_sym
        and worst_conc >= -tol_conc
        and report.worst_margin >= -tol_mix
    )
    print(
        f"dual formula worst dev {worst_dual:.3e}; symmetry worst dev {worst_sym:.3e}; "
        f"ceiling concavity worst margin {worst_conc:.3e}; "
        f"mixed-window worst margin {report.worst_margin:.3e} "
        f"({report.samples} samples) -> {'ok' if ok else 'FAIL'}"
    )
    return 0 if ok else 1


def build_parser() -> tuple[argparse.ArgumentParser, dict]:
    parser = argparse.ArgumentParser(
        prog="cqclab",
        description="covert queueing channel laboratory",
    )
    parser.add_argument("--seed", type=int, default=0, help="PRNG seed (64-bit)")
    parser.add_argument("--out", type=str, default=None, help="CSV output path")
    parser.add_argument("--config", type=str, default=None, help="JSON config file")
    parser.add_argument(
        "--tolerance", type=float, default=None, help="override numeric tolerance"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    subparsers: dict[str, argparse.ArgumentParser] = {}

    def add_parser(name, **kw):
        subparsers[name] = sub.add_parser(name, **kw)
        return subparsers[name]

    p = add_parser("htilde", help="entropy-ceiling sweep over gamma and k")
    p.add_argument("--gamma-step", type=float, default=0.01)
    p.add_argument("--k-set", type=str, default="1,2,3")
    p.set_defaults(func=cmd_htilde)

    p = add_parser("capacity2", help="two-user capacity solve")
    p.add_argument("--alpha-fixed", type=float, default=None)
    p.set_defaults(func=cmd_capacity2)

    p = add_parser("capacity3", help="three-user capacity over background rates")
    p.add_argument("--rp-grid", type=str, default="0,0.05,0.1")
    p.add_argument("--tau-max", type=int, default=8)
    p.add_argument("--itilde", action="store_true", help="emit i_tilde sweep instead")
    p.add_argument("--k-set", type=str, default="1,2,3")
    p.add_argument("--gamma-step", type=float, default=0.01)
    p.set_defaults(func=cmd_capacity3)

    p = add_parser("simulate", help="end-to-end coded transmission")
    p.add_argument("--users", type=int, choices=(2, 3), default=2)
    p.add_argument("--n", type=int, default=60)
    p.add_argument("--M", type=int, default=16)
    p.add_argument("--trials", type=int, default=1000)
    p.add_argument("--rp", type=float, default=None)
    p.add_argument("--tau-max", type=int, default=8)
    p.add_argument("--delta", type=float, default=1e-3)
    p.add_argument("--backlog", type=int, default=None)
    p.add_argument("--trace", type=str, default=None, help="per-slot trace CSV path")
    p.set_defaults(func=cmd_simulate)

    p = add_parser("stability", help="Bernoulli-traffic queue drift probe")
    p.add_argument("--rates", type=str, default="0.475,0.475")
    p.add_argument("--horizon", type=int, default=10**6)
    p.set_defaults(func=cmd_stability)

    p = add_parser("validate", help="property sweeps with worst margins")
    p.add_argument("--tau-max", type=int, default=8)
    p.add_argument("--samples", type=int, default=500)
    p.set_defaults(func=cmd_validate)
    return parser, subparsers


def main(argv: list[str] | None = None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        with open(args.config) as fh:
            cfg = json.load(fh)
        known = set(vars(args))
        bad = set(cfg) - known
        if bad:
            print(f"unknown config keys: {sorted(bad)}", file=sys.stderr)
            return 2
        parser.set_defaults(**cfg)
        for sp in subparsers.values():
            sp.set_defaults(**{k: v for k, v in cfg.items() if k != "command"})
        args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, LookupError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
