"""
Command-line entry point.

Verbs: ``brackets``, ``tune``, ``simulate``, ``oracle``, ``report``.
Exit codes: 0 success, 2 usage or input error, 3 stopped by the budget cap
(or an interrupt), 4 run failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import logging
import shutil
import signal
import sys
import threading
from pathlib import Path
from typing import Any, Sequence

from hyperband import theory
from hyperband.evaluator import (
    ArmFactory,
    BudgetLedger,
    HyperbandError,
    TrialLog,
    load_replay,
)
from hyperband.hyperband import HyperbandParams, compute_brackets, default_n_max, hyperband_practical
from hyperband.niab import TheoryInstance, load_instance
from hyperband.report import render, summarize_log
from hyperband.search_space import SpaceError, builtin_space, load_space
from hyperband.simulate import ALGOS, SimConfig, simulate, summarize
from hyperband.trainer import SubprocessOracle

EXIT_OK, EXIT_USAGE, EXIT_TRUNCATED, EXIT_FAILED = 0, 2, 3, 4

log = logging.getLogger("hyperband")


class UsageError(Exception):
    pass


def _dump(obj: Any) -> str:
    return json.dumps(obj, indent=2, sort_keys=True)


# brackets ------------------------------------------------------------------

def _num(x: float | None) -> float | int | None:
    return int(x) if isinstance(x, float) and x.is_integer() else x


def _params_from(args: argparse.Namespace, **extra) -> HyperbandParams:
    n_max = args.n_max
    if getattr(args, "n_max_rule", False):
        n_max = default_n_max(args.R)
    try:
        return HyperbandParams(args.R, _num(args.eta), n_max, args.n_min, **extra)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def bracket_table(params: HyperbandParams) -> dict:
    plans = compute_brackets(params)
    return {
        "R": params.R, "eta": params.eta, "s_max": params.s_max, "B": params.B,
        "brackets": [{
            "s": p.s, "n": p.n, "r": float(p.r), "cost": p.cost,
            "rungs": [{"i": e.i, "n_i": e.n, "r_i": e.r} for e in p.schedule],
        } for p in plans],
        "total": sum(p.cost for p in plans),
    }


def render_brackets(table: dict) -> str:
    bs = table["brackets"]
    width = 14
    head = "".join(f"{'s=' + str(b['s']):>{width}}" for b in bs)
    sub = "".join(f"{'n_i':>7}{'r_i':>7}" for _ in bs)
    lines = [f"R={table['R']} eta={table['eta']} s_max={table['s_max']} B={table['B']}", "",
             f"{'i':>3}" + head, f"{'':>3}" + sub]
    depth = max(len(b["rungs"]) for b in bs)
    for i in range(depth):
        row = f"{i:>3}"
        for b in bs:
            if i < len(b["rungs"]):
                r = b["rungs"][i]
                row += f"{r['n_i']:>7}{r['r_i']:>7}"
            else:
                row += " " * width
        lines.append(row)
    lines.append(f"{'sum':>3}" + "".join(f"{b['cost']:>{width}}" for b in bs))
    lines.append(f"total resource over all brackets: {table['total']}")
    return "\n".join(lines)


def cmd_brackets(args: argparse.Namespace) -> int:
    try:
        table = bracket_table(_params_from(args))
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    print(_dump(table) if args.json else render_brackets(table))
    return EXIT_OK


# tune ----------------------------------------------------------------------

TUNE_DEFAULTS = {
    "R": None, "eta": 3, "n_max": None, "n_min": None, "n_max_rule": False, "seed": 0,
    "budget": None, "accounting": "full", "incumbent": "max_resource", "max_parallel": 1,
    "timeout_secs": None, "space": None, "trainer": None, "replay": None, "out": None,
    "resource_unit": "unit", "outer_loops": 1,
}


class _EmptySpace:
    """Configurations for the replay backend, where arms are identified by id only."""

    def sample(self, rng, n: int) -> list[dict]:
        return [{} for _ in range(n)]


def resolve_manifest(args: argparse.Namespace) -> dict:
    merged = dict(TUNE_DEFAULTS)
    if args.manifest:
        try:
            raw = json.loads(Path(args.manifest).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise UsageError(f"cannot read manifest {args.manifest}: {exc}") from exc
        params = raw.get("params", raw)
        unknown = set(params) - set(TUNE_DEFAULTS) - {"command"}
        if unknown:
            raise UsageError(f"unknown manifest keys: {sorted(unknown)}")
        merged.update({k: v for k, v in params.items() if k != "command"})
    for key in TUNE_DEFAULTS:
        v = getattr(args, key, None)
        if v is not None and v is not False:
            merged[key] = v
    if merged["R"] is None:
        raise UsageError("--R is required (on the command line or in the manifest)")
    if merged["out"] is None:
        raise UsageError("--out is required")
    if (merged["trainer"] is None) == (merged["replay"] is None):
        raise UsageError("give exactly one of --trainer or --replay")
    if merged["trainer"] is not None and merged["space"] is None:
        raise UsageError("--trainer needs --space")
    return merged


def _load_space(ref: str):
    path = Path(ref)
    if path.exists():
        return load_space(path)
    try:
        return builtin_space(ref)
    except (FileNotFoundError, ModuleNotFoundError):
        raise UsageError(f"space file {ref} does not exist") from None


def cmd_tune(args: argparse.Namespace) -> int:
    m = resolve_manifest(args)
    out = Path(m["out"])
    ns = argparse.Namespace(R=m["R"], eta=m["eta"], n_max=m["n_max"], n_min=m["n_min"],
                            n_max_rule=m["n_max_rule"])
    outer = m["outer_loops"] if m["outer_loops"] not in (0, None) else None
    params = _params_from(ns, outer_loops=outer, incumbent=m["incumbent"])
    if outer is None and m["budget"] is None:
        raise UsageError("unbounded --outer-loops 0 needs --budget")
    if m["budget"] is not None and m["budget"] < params.R:
        raise UsageError(f"budget cap {m['budget']} cannot fit a single evaluation at R={params.R}")

    try:
        space = _load_space(m["space"]) if m["space"] else _EmptySpace()
    except SpaceError as exc:
        raise UsageError(f"malformed space: {exc}") from exc
    if m["replay"] is not None:
        try:
            oracle = load_replay(Path(m["replay"]).read_text())
        except OSError as exc:
            raise UsageError(f"cannot read replay file: {exc}") from exc
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
    else:
        oracle = SubprocessOracle(m["trainer"], out / "checkpoints", m["resource_unit"],
                                  m["timeout_secs"])
        if shutil.which(oracle.command[0]) is None:
            print(f"error: trainer {oracle.command[0]!r} is not executable", file=sys.stderr)
            return EXIT_FAILED

    out.mkdir(parents=True, exist_ok=True)
    (out / "manifest.json").write_text(_dump({"command": "tune", "params": m}) + "\n")
    trials_path = out / "trials.jsonl"
    trials_path.unlink(missing_ok=True)
    trial_log = TrialLog(trials_path)
    ledger = BudgetLedger(m["budget"], m["accounting"])

    stop = threading.Event()
    previous = signal.getsignal(signal.SIGINT)
    if threading.current_thread() is threading.main_thread():
        signal.signal(signal.SIGINT, lambda *_: stop.set())
    try:
        traj = hyperband_practical(params, space, oracle, ledger, m["seed"],
                                   max_parallel=m["max_parallel"], log=trial_log,
                                   factory=ArmFactory(), stop=stop)
    except HyperbandError as exc:
        print(f"error: run failed: {exc}", file=sys.stderr)
        return EXIT_FAILED
    finally:
        if threading.current_thread() is threading.main_thread():
            signal.signal(signal.SIGINT, previous)

    best = traj.best
    result = {
        "truncated": traj.truncated, "ledger_consumed": ledger.consumed,
        "brackets_run": len(traj.brackets),
        "best": None if best is None else {
            "arm_id": best.arm_id, "config": best.config, "loss": best.loss,
            "resource": best.level, "ledger_consumed": best.ledger_consumed},
    }
    (out / "best.json").write_text(_dump(result) + "\n")
    print(_dump(result) if args.json else render(summarize_log(trials_path)))
    if best is None:
        print("error: no configuration was evaluated successfully", file=sys.stderr)
        return EXIT_FAILED
    return EXIT_TRUNCATED if traj.truncated else EXIT_OK


# simulate ------------------------------------------------------------------

def _floats(text: str | None) -> list[float] | None:
    if text is None:
        return None
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from None


def _instance_from(args: argparse.Namespace) -> TheoryInstance:
    try:
        if args.instance:
            return load_instance(args.instance)
        fields = {
            "family": args.family, "alpha": args.alpha, "beta": args.beta,
            "nu_star": args.nu_star, "mus": tuple(_floats(args.mus) or ()),
            "noise": args.noise, "width": args.width, "seed": args.seed,
            "envelope_sign": args.sign, "pivot": args.pivot, "horizon": args.horizon,
            "band": args.band,
        }
        return TheoryInstance(**fields)
    except (OSError, ValueError, TypeError) as exc:
        raise UsageError(f"invalid instance: {exc}") from exc


def cmd_simulate(args: argparse.Namespace) -> int:
    instance = _instance_from(args)
    budgets = [int(b) for b in (_floats(",".join(args.budget)) or [])]
    if args.trials > 0 and not budgets:
        raise UsageError("--budget is required")
    brackets = tuple(int(b) for b in _floats(args.brackets)) if args.brackets else None
    try:
        cfg = SimConfig(args.algo, args.R, args.eta, args.n, args.delta, brackets)
        rows = simulate(instance, cfg, budgets, args.trials, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    summary = summarize(rows)
    payload = {"instance": instance.to_dict(), "algo": args.algo, "seed": args.seed,
               "summary": summary, "rows": rows}
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "results.json").write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
        with (out / "results.csv").open("w", newline="") as fh:
            cols = ["algo", "budget", "trial", "regret", "consumed", "truncated"]
            w = csv.DictWriter(fh, fieldnames=cols, extrasaction="ignore")
            w.writeheader()
            w.writerows(rows)
    if args.json:
        print(_dump(payload))
    elif not summary:
        print("no trials")
    else:
        print(f"{'budget':>10} {'trials':>7} {'mean':>10} {'min':>10} {'max':>10} {'consumed':>10}")
        for s in summary:
            fmt = lambda v: "nan" if v is None else f"{v:.4g}"  # noqa: E731
            print(f"{s['budget']:>10} {s['trials']:>7} {fmt(s['mean_regret']):>10} "
                  f"{fmt(s['min_regret']):>10} {fmt(s['max_regret']):>10} "
                  f"{s['mean_consumed']:>10.1f}")
    return EXIT_OK


# oracle --------------------------------------------------------------------

QUANTITIES = ("gamma_inv", "z_sh_infinite", "z_sh_finite", "h_complexity", "uniform_budget",
              "lower_budget", "scaling", "discrete_scaling")


def _need(args: argparse.Namespace, *names: str) -> None:
    missing = [n for n in names if getattr(args, n) is None]
    if missing:
        raise UsageError(f"{args.quantity} needs " + ", ".join("--" + m.replace("_", "-")
                                                               for m in missing))


def cmd_oracle(args: argparse.Namespace) -> int:
    q = args.quantity
    limits = _floats(args.limits)
    try:
        if q == "gamma_inv":
            _need(args, "y")
            inputs = {"alpha": args.alpha, "y": args.y, "R": args.R}
            value: Any = theory.gamma_inv(args.alpha, args.y, args.R)
        elif q == "z_sh_infinite":
            _need(args, "limits", "eps")
            inputs = {"limits": limits, "eps": args.eps, "alpha": args.alpha}
            z, z_sum = theory.z_sh_infinite(limits, args.eps, args.alpha)
            value = {"z": z, "z_sum": z_sum}
        elif q == "z_sh_finite":
            _need(args, "limits", "eps", "R")
            inputs = {"limits": limits, "eps": args.eps, "alpha": args.alpha, "R": args.R,
                      "eta": args.eta}
            value = theory.z_sh_finite(limits, args.eps, args.alpha, args.R, args.eta)
        elif q in ("h_complexity", "uniform_budget", "lower_budget"):
            _need(args, "n", "delta")
            inst = _instance_from(args)
            inputs = {"instance": inst.to_dict(), "n": args.n, "delta": args.delta}
            if q == "h_complexity":
                inputs["eps"] = args.eps
                value = theory.h_complexity(inst, args.n, args.delta, args.eps)
            else:
                inputs["R"] = args.R
                fn = theory.uniform_budget if q == "uniform_budget" else theory.lower_budget
                value = fn(inst, args.n, args.delta, args.R)
        elif q == "scaling":
            _need(args, "Delta", "delta")
            inputs = {"alpha": args.alpha, "beta": args.beta, "Delta": args.Delta,
                      "delta": args.delta}
            value = theory.scaling_predictions(args.alpha, args.beta, args.Delta, args.delta)
        else:
            _need(args, "mus", "delta", "q")
            mus = _floats(args.mus)
            inputs = {"mus": mus, "alpha": args.alpha, "delta": args.delta, "q": args.q,
                      "R": args.R}
            value = theory.discrete_predictions(mus, args.alpha, args.delta, args.q, args.R)
    except (ValueError, ArithmeticError) as exc:
        raise UsageError(str(exc)) from exc
    print(json.dumps({"quantity": q, "inputs": inputs, "value": value}, sort_keys=True))
    return EXIT_OK


# report --------------------------------------------------------------------

def cmd_report(args: argparse.Namespace) -> int:
    try:
        summary = summarize_log(args.log)
    except OSError as exc:
        raise UsageError(f"cannot read log: {exc}") from exc
    for w in summary.warnings:
        print(f"warning: {w}", file=sys.stderr)
    print(_dump(summary.to_json()) if args.json else render(summary))
    return EXIT_OK


# parser --------------------------------------------------------------------

def _common(p: argparse.ArgumentParser, R_required: bool = False) -> None:
    p.add_argument("--R", type=int, required=R_required, help="maximum resource per configuration")
    p.add_argument("--eta", type=float, help="elimination factor (default 3)")
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--n-min", type=int, dest="n_min")
    p.add_argument("--n-max-rule", action="store_true", dest="n_max_rule",
                   help="set n_max = max(9, R // 1000)")
    p.add_argument("--json", action="store_true", help="machine-readable output")


def _instance_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--instance", help="instance description (JSON)")
    p.add_argument("--family", default="beta_continuous",
                   choices=["beta_continuous", "discrete", "stochastic", "adversarial"])
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--nu-star", type=float, default=0.0, dest="nu_star")
    p.add_argument("--mus", help="comma-separated means (discrete family)")
    p.add_argument("--noise", default="none", choices=["none", "bernoulli", "uniform_bounded"])
    p.add_argument("--width", type=float, default=0.5)
    p.add_argument("--sign", default="plus", choices=["plus", "alternating", "adversarial"])
    p.add_argument("--pivot", type=float)
    p.add_argument("--horizon", type=int)
    p.add_argument("--band", type=float, help="width above the pivot of arms that look good")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hyperband", description=__doc__.split("\n\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("brackets", help="print the rung schedule of every bracket")
    p.add_argument("R_pos", type=int, metavar="R")
    p.add_argument("eta_pos", type=float, metavar="ETA", nargs="?", default=3)
    p.add_argument("--n-max", type=int, dest="n_max")
    p.add_argument("--n-min", type=int, dest="n_min")
    p.add_argument("--n-max-rule", action="store_true", dest="n_max_rule")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_brackets)

    p = sub.add_parser("tune", help="run Hyperband against a trainer or replay file")
    _common(p)
    p.add_argument("--manifest", help="run manifest (JSON); flags override its values")
    p.add_argument("--space", help="search space file or built-in space name")
    p.add_argument("--trainer", help="trainer command")
    p.add_argument("--replay", help="replay file {arm_id: {level: loss}}")
    p.add_argument("--seed", type=int)
    p.add_argument("--budget", type=int, help="ledger cap in resource units")
    p.add_argument("--accounting", choices=["full", "delta"])
    p.add_argument("--incumbent", choices=["max_resource", "paper"])
    p.add_argument("--max-parallel", type=int, dest="max_parallel")
    p.add_argument("--timeout-secs", type=float, dest="timeout_secs")
    p.add_argument("--outer-loops", type=int, dest="outer_loops",
                   help="number of outer loops; 0 repeats until the budget cap")
    p.add_argument("--resource-unit", dest="resource_unit")
    p.add_argument("--out", help="output directory")
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("simulate", help="repeated trials on synthetic arms")
    _instance_flags(p)
    p.add_argument("--algo", required=True, choices=ALGOS)
    p.add_argument("--trials", type=int, default=10)
    p.add_argument("--budget", action="append", default=[],
                   help="budget or comma-separated budget grid (repeatable)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--R", type=int, default=81)
    p.add_argument("--eta", type=float, default=3)
    p.add_argument("--n", type=int, help="arms per run (sha, sha_inf, uniform, adversarial)")
    p.add_argument("--delta", type=float, default=0.1)
    p.add_argument("--brackets", help="comma-separated bracket indices (hyperband)")
    p.add_argument("--out", help="directory for results.csv and results.json")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("oracle", help="evaluate a complexity quantity")
    p.add_argument("quantity", choices=QUANTITIES)
    _instance_flags(p)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--limits", help="comma-separated limit losses")
    p.add_argument("--eps", type=float)
    p.add_argument("--delta", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--R", type=int)
    p.add_argument("--eta", type=float, default=3)
    p.add_argument("--y", type=float)
    p.add_argument("--Delta", type=float)
    p.add_argument("--q", type=float)
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("report", help="summarize a trial log")
    p.add_argument("log")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.verb == "brackets":
        args.R, args.eta = args.R_pos, args.eta_pos
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
