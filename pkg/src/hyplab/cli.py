"""Command-line experiment runner.

Every subcommand accepts ``--config FILE``: a flat text file of
``key = value`` lines (``#`` starts a comment, keys use the flag names with
dashes or underscores). Flags given on the command line override the file.
Exit status is 0 when every check passes, 1 when violations were found and
2 for configuration errors.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Callable, Sequence

from hyplab import __version__
from hyplab.report import ExperimentWriter, save_svg

OK, VIOLATIONS, CONFIG_ERROR = 0, 1, 2


class ConfigError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    out = []
    for part in str(text).replace(",", " ").split():
        if "-" in part[1:]:
            lo, hi = part.split("-", 1)
            out.extend(range(int(lo), int(hi) + 1))
        else:
            out.append(int(part))
    return out


def read_config(path: str | Path) -> dict[str, str]:
    """Parse the flat ``key = value`` grammar."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config: file {path} does not exist")
    values = {}
    for lineno, raw in enumerate(path.read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError(f"config: line {lineno} is not 'key = value'")
        values[key.strip().replace("-", "_")] = value.strip()
    return values


# -- subcommands ---------------------------------------------------------------------
def cmd_farey_dist(args, writer: ExperimentWriter) -> int:
    from hyplab.torus import bfs_oracle, farey_distance, parse_slope

    s, t = parse_slope(args.source), parse_slope(args.target)
    d = farey_distance(s, t)
    rec = {"experiment": "farey-dist", "source": str(s), "target": str(t), "distance": d}
    status = OK
    if args.bfs_bound:
        oracle = bfs_oracle(s, t, args.bfs_bound)
        rec["bfs_bound"] = args.bfs_bound
        rec["bfs_distance"] = oracle
        status = OK if oracle == d else VIOLATIONS
    writer.add(rec)
    print(d)
    return status


def _spaces(args):
    from hyplab import hyperbolic as hy

    if args.graphs:
        root = Path(args.graphs)
        if root.is_dir():
            files = sorted(p for p in root.iterdir() if p.is_file() and not p.name.startswith("."))
        elif root.is_file():
            files = [root]
        else:
            raise ConfigError(f"graphs: {root} does not exist")
        return [hy.FiniteSpace.load(p) for p in files]
    suite = args.suite
    if suite == "trees":
        return list(hy.all_trees(args.max_vertices))
    if suite == "random":
        return hy.random_suite(args.count, args.max_vertices, args.seed)
    if suite == "farey":
        return [hy.farey_ball(args.farey_bound)]
    raise ConfigError("graphs: give --graphs PATH or --suite trees|random|farey")


def cmd_verify_props(args, writer: ExperimentWriter) -> int:
    from hyplab.propositions import PROPOSITIONS, verify_propositions

    props = args.propositions.split(",") if args.propositions else None
    if props:
        unknown = set(props) - set(PROPOSITIONS)
        if unknown:
            raise ConfigError(f"propositions: unknown names {sorted(unknown)}")
    tally: dict[str, int] = {}
    status = OK
    for space in _spaces(args):
        for rec in verify_propositions(space, props, seed=args.seed, samples=args.samples):
            writer.add({"experiment": "verify-props", **rec.as_dict()})
            tally[rec.proposition] = tally.get(rec.proposition, 0) + rec.violations
            mark = "ok" if rec.passed else "VIOLATION"
            print(f"{rec.space_id}\t{rec.proposition}\tchecked={rec.checked}\tviolations={rec.violations}\t{mark}")
            if not rec.passed:
                status = VIOLATIONS
    writer.write_csv("tally.csv", ["proposition", "violations"], sorted(tally.items()))
    if args.plot and writer.out:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(7, 3))
        names = sorted(tally)
        ax.bar(names, [tally[k] for k in names])
        ax.set_ylabel("violations")
        ax.tick_params(axis="x", rotation=45)
        fig.tight_layout()
        save_svg(fig, writer.svg_path("violations.svg"))
        plt.close(fig)
    return status


def cmd_drift(args, writer: ExperimentWriter) -> int:
    from hyplab.walks import drift_estimate, parse_distribution

    mu = parse_distribution(args.mu)
    checkpoints = _int_list(args.checkpoints) if args.checkpoints else [max(1, args.steps * k // 10) for k in range(1, 10)]
    rep = drift_estimate(mu, args.metric, args.steps, args.replicas, args.seed, args.level, checkpoints)
    writer.add({**rec_without_seed(rep.record()), "mu": mu.to_text(), "level": rep.level})
    writer.write_csv("curve.csv", ["n", "mean_length", "mean_rate"], [(k, v, v / k) for k, v in sorted(rep.curve.items())])
    print(f"drift {rep.estimate:.6f} stderr {rep.stderr:.6f} ci [{rep.ci_low:.6f}, {rep.ci_high:.6f}]")
    if args.plot and writer.out:
        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3.5))
        ks = sorted(rep.curve)
        ax.plot(ks, [rep.curve[k] / k for k in ks], marker="o")
        ax.axhspan(rep.ci_low, rep.ci_high, alpha=0.2)
        ax.set_xlabel("n")
        ax.set_ylabel("mean |w_n| / n")
        fig.tight_layout()
        save_svg(fig, writer.svg_path("drift.svg"))
        plt.close(fig)
    return OK


def rec_without_seed(rec: dict) -> dict:
    return {k: v for k, v in rec.items() if k != "seed"}


def cmd_halfrate(args, writer: ExperimentWriter) -> int:
    from hyplab.walks import halfrate_statistic

    h = halfrate_statistic(args.steps, args.replicas, args.seed)
    writer.add({"experiment": "halfrate", "n": h.n, "replicas": h.replicas, "estimate": h.frequency, "stderr": h.stderr})
    print(f"halfrate {h.frequency:.6f} stderr {h.stderr:.6f}")
    return OK


def cmd_delta_nm(args, writer: ExperimentWriter) -> int:
    from hyplab.walks import delta_nm, delta_nm_exact, parse_distribution, scan_delta_nm

    mu = parse_distribution(args.mu)
    ms = _int_list(args.m)
    status = OK
    if args.exact:
        for m in ms:
            mc = delta_nm(mu, args.n, m, args.replicas, args.seed)
            ex = delta_nm_exact(mu, args.n, m, args.budget)
            agree = abs(mc.estimate - float(ex)) <= 3 * mc.stderr
            writer.add({**rec_without_seed(mc.record(args.level)), "exact": str(ex), "agrees": agree})
            print(f"n={args.n} m={m} mc={mc.estimate:.5f}±{mc.stderr:.5f} exact={ex} {'ok' if agree else 'DISAGREE'}")
            if not agree:
                status = VIOLATIONS
        return status
    scan = scan_delta_nm(mu, args.n, ms, args.replicas, args.seed, args.level)
    for m, e, s in zip(scan.ms, scan.estimates, scan.stderrs):
        writer.add({"experiment": "delta-nm", "metric": "farey-displacement", "n": scan.n, "m": m,
                    "replicas": scan.replicas, "estimate": e, "stderr": s,
                    "ci_low": e - scan.z * s, "ci_high": e + scan.z * s})
    writer.add({"experiment": "delta-nm-scan", "n": scan.n, "onset": scan.onset, "delta0": scan.delta0})
    writer.write_csv("scan.csv", ["m", "estimate", "stderr"], zip(scan.ms, scan.estimates, scan.stderrs))
    print(f"onset {scan.onset} delta0 {scan.delta0}")
    return OK if scan.onset is not None else VIOLATIONS


def cmd_decay(args, writer: ExperimentWriter) -> int:
    from hyplab.measure import decay_experiment
    from hyplab.torus import GroupElement
    from hyplab.walks import parse_distribution

    mu = parse_distribution(args.mu)
    direction = GroupElement.parse(args.direction)
    ns = _int_list(args.ns)
    ex = decay_experiment(mu, direction, args.spacing, args.count, args.replicas, args.seed, args.horizon, ns)
    for i, (r, h) in enumerate(zip(ex.family.lengths, ex.harmonic)):
        writer.add({"experiment": "decay-harmonic", "index": i, "r": r, "exponent": ex.family.exponents[i],
                    "metric": "farey-displacement", **h.record()})
    for c in ex.mu_n:
        writer.add({"experiment": "decay-mu-n", "index": c.index, "n": c.n, "r": c.r, "estimate": c.estimate,
                    "stderr": c.stderr, "bound": c.bound, "passed": c.passed})
    writer.add({"experiment": "decay-fit", **ex.fit_record(), "nesting_violations": len(ex.family.violations),
                "monotone_violations": ex.monotone_violations})
    writer.write_csv("decay.csv", ["r", "estimate", "stderr"], [(r, h.estimate2, h.stderr2) for r, h in zip(ex.family.lengths, ex.harmonic)])
    f = ex.fit
    print(f"L_hat {f.L_hat:.5f} slope CI [{f.slope_ci_low:.5f}, {f.slope_ci_high:.5f}] Q_hat {f.Q_hat} "
          f"gate {'ok' if ex.gate_passed else 'REJECTED'} mu_n {'ok' if ex.mu_n_passed else 'VIOLATION'}")
    if args.plot and writer.out:
        import math

        import matplotlib

        matplotlib.use("Agg")
        import matplotlib.pyplot as plt

        fig, ax = plt.subplots(figsize=(5, 3.5))
        rs = [p[0] for p in f.points]
        ax.errorbar(rs, [p[1] for p in f.points], yerr=[p[2] for p in f.points], fmt="o")
        ax.plot(rs, [math.exp(f.intercept + f.slope * r) for r in rs])
        ax.set_yscale("log")
        ax.set_xlabel("relative length r")
        ax.set_ylabel("endpoint frequency")
        fig.tight_layout()
        save_svg(fig, writer.svg_path("decay.svg"))
        plt.close(fig)
    good = ex.gate_passed and ex.mu_n_passed and not ex.family.violations and f.slope_ci_high < 0
    return OK if good else VIOLATIONS


def cmd_schottky_certify(args, writer: ExperimentWriter) -> int:
    from hyplab.schottky import certify_schottky, free_group_audit
    from hyplab.torus import GroupElement

    a, b = GroupElement.parse(args.a), GroupElement.parse(args.b)
    try:
        res = certify_schottky(a, b, args.max_power, args.rounds)
    except ValueError as exc:
        raise ConfigError(f"a/b: {exc}") from exc
    writer.write_csv("transcript.csv", ["p", "q", "round", "result"], [(t["p"], t["q"], t["round"], t["result"]) for t in res.transcript])
    if not res.found:
        writer.add({"experiment": "schottky-certify", "found": False, "attempts": len(res.transcript)})
        print("no certificate found")
        return VIOLATIONS
    cert = res.certificate
    audit = free_group_audit(cert, args.audit_length)
    writer.add({"experiment": "schottky-certify", "found": True, "certificate": cert.to_json(), "audit": audit.record()})
    writer.write_json("certificate.json", cert.to_json())
    print(cert.dumps())
    return OK if audit.passed else VIOLATIONS


def cmd_schottky_verify(args, writer: ExperimentWriter) -> int:
    from hyplab.schottky import PingPongCertificate

    path = Path(args.certificate)
    if not path.is_file():
        raise ConfigError(f"certificate: file {path} does not exist")
    try:
        cert = PingPongCertificate.loads(path.read_text())
    except (KeyError, ValueError, TypeError) as exc:
        raise ConfigError(f"certificate: malformed ({exc})") from exc
    bad = cert.failures()
    writer.add({"experiment": "schottky-verify", "certificate": cert.to_json(), "valid": not bad, "failures": bad})
    print("valid" if not bad else "invalid: " + "; ".join(bad))
    return OK if not bad else VIOLATIONS


# -- parser ------------------------------------------------------------------------------
def _common(p: argparse.ArgumentParser, seed: int | None = 0) -> None:
    p.add_argument("--config", help="flat key = value file; flags override it")
    p.add_argument("--out", help="experiment directory for JSON-lines, CSV and metadata")
    p.add_argument("--plot", action="store_true", help="also write SVG plots")
    if seed is not None:
        p.add_argument("--seed", type=int, default=seed)


COMMANDS: dict[str, Callable] = {}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyplab", description="Random walks on the torus mapping class group")
    parser.add_argument("--version", action="version", version=f"hyplab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("farey-dist", help="Farey graph distance between two slopes")
    p.add_argument("source")
    p.add_argument("target")
    p.add_argument("--bfs-bound", type=int, default=0, help="also compare with box BFS of this bound")
    _common(p, seed=None)

    p = sub.add_parser("verify-props", help="check the coarse-geometry propositions on finite graphs")
    p.add_argument("--graphs", help="edge-list file or directory of them")
    p.add_argument("--suite", choices=["trees", "random", "farey"])
    p.add_argument("--max-vertices", type=int, default=9)
    p.add_argument("--count", type=int, default=200)
    p.add_argument("--farey-bound", type=int, default=30)
    p.add_argument("--propositions", help="comma-separated subset")
    p.add_argument("--samples", type=int, default=100_000)
    _common(p)

    p = sub.add_parser("drift", help="rate of escape estimate")
    p.add_argument("--mu", default="uniform-LR")
    p.add_argument("--metric", choices=["farey-displacement", "word"], default="farey-displacement")
    p.add_argument("--steps", type=int, default=5000)
    p.add_argument("--replicas", type=int, default=200)
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--checkpoints", help="comma-separated step counts")
    _common(p)

    p = sub.add_parser("halfrate", help="turn-change frequency of the tree walk")
    p.add_argument("--steps", type=int, default=100_000)
    p.add_argument("--replicas", type=int, default=1)
    _common(p)

    p = sub.add_parser("delta-nm", help="progress increments E|w_{n+m}| - E|w_n|")
    p.add_argument("--mu", default="uniform-LR")
    p.add_argument("--n", type=int, default=50)
    p.add_argument("--m", default="1-40", help="list or ranges, e.g. 1-40 or 1,2,4")
    p.add_argument("--replicas", type=int, default=4000)
    p.add_argument("--level", type=float, default=0.99)
    p.add_argument("--exact", action="store_true", help="compare with exact enumeration")
    p.add_argument("--budget", type=int, default=2_000_000)
    _common(p)

    p = sub.add_parser("decay", help="endpoint frequencies along a nested halfspace family")
    p.add_argument("--mu", default="uniform-LR")
    p.add_argument("--direction", default="[[2,1],[1,1]]")
    p.add_argument("--spacing", type=int, default=1)
    p.add_argument("--count", type=int, default=5)
    p.add_argument("--replicas", type=int, default=20_000)
    p.add_argument("--horizon", type=int, default=0, help="0 means 20 times the largest relative length")
    p.add_argument("--ns", default="10,20,40")
    _common(p)

    p = sub.add_parser("schottky-certify", help="search for a ping-pong certificate")
    p.add_argument("--a", default="[[2,1],[1,1]]")
    p.add_argument("--b", default="[[1,1],[1,2]]")
    p.add_argument("--max-power", type=int, default=10)
    p.add_argument("--rounds", type=int, default=8)
    p.add_argument("--audit-length", type=int, default=6)
    _common(p, seed=None)

    p = sub.add_parser("schottky-verify", help="re-verify a stored certificate")
    p.add_argument("certificate")
    _common(p, seed=None)

    COMMANDS.update({
        "farey-dist": cmd_farey_dist,
        "verify-props": cmd_verify_props,
        "drift": cmd_drift,
        "halfrate": cmd_halfrate,
        "delta-nm": cmd_delta_nm,
        "decay": cmd_decay,
        "schottky-certify": cmd_schottky_certify,
        "schottky-verify": cmd_schottky_verify,
    })
    return parser


def _subparser(parser: argparse.ArgumentParser, name: str) -> argparse.ArgumentParser:
    for action in parser._subparsers._group_actions:
        if name in action.choices:
            return action.choices[name]
    raise KeyError(name)


def _apply_config(parser: argparse.ArgumentParser, argv: Sequence[str]) -> argparse.Namespace:
    args = parser.parse_args(argv)
    if not getattr(args, "config", None):
        return args
    sub = _subparser(parser, args.command)
    known = {a.dest: a for a in sub._actions if a.dest not in ("help", "config")}
    defaults = {}
    for key, raw in read_config(args.config).items():
        if key not in known:
            raise ConfigError(f"{key}: not an option of {args.command}")
        action = known[key]
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = raw.lower() in ("1", "true", "yes", "on")
        else:
            try:
                defaults[key] = action.type(raw) if action.type else raw
            except ValueError as exc:
                raise ConfigError(f"{key}: {exc}") from exc
    sub.set_defaults(**defaults)
    # positional arguments may come from the file alone
    for action in sub._actions:
        if not action.option_strings and action.dest in defaults:
            action.nargs = "?"
    return parser.parse_args(argv)


def _validate(args: argparse.Namespace) -> None:
    for key in ("steps", "replicas", "count", "n", "max_power", "rounds", "audit_length", "spacing"):
        v = getattr(args, key, None)
        if v is not None and v < 1:
            raise ConfigError(f"{key}: must be positive, got {v}")
    if getattr(args, "mu", None):
        from hyplab.walks import parse_distribution

        try:
            parse_distribution(args.mu)
        except ValueError as exc:
            raise ConfigError(f"mu: {exc}") from exc
    level = getattr(args, "level", None)
    if level is not None and not 0 < level < 1:
        raise ConfigError(f"level: must lie in (0, 1), got {level}")


def main(argv: Sequence[str] | None = None) -> int:
    from hyplab.walks import BudgetExceeded

    parser = build_parser()
    argv = list(sys.argv[1:] if argv is None else argv)
    try:
        args = _apply_config(parser, argv)
        _validate(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except SystemExit as exc:
        return CONFIG_ERROR if exc.code else OK
    config = {k: v for k, v in vars(args).items() if k not in ("out", "config", "plot")}
    writer = ExperimentWriter(args.out, args.command, config, getattr(args, "seed", None))
    try:
        status = COMMANDS[args.command](args, writer)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    except BudgetExceeded as exc:
        print(f"configuration error: budget: {exc}", file=sys.stderr)
        return CONFIG_ERROR
    writer.finish(status)
    return status


if __name__ == "__main__":
    sys.exit(main())
