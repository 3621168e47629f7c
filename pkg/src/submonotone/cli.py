"""Batch runner: JSON config in, JSON/CSV reports out.

    submonotone <command> [--config PATH] [--seed N] [--out DIR] [--tol X] [--self-test]

Exit codes: 0 clean, 1 violations found, 2 invalid config.
"""

from __future__ import annotations

import argparse
import copy
import csv
import hashlib
import io
import json
import math
import os
import sys
import tempfile

import numpy as np

from . import __version__
from .errors import AllRatiosDegenerate, InvalidConfig, MissingUpperBound, SubmonotoneError, UnsupportedFunctional
from .estimate import chain_verify, discrete_oracle, lower_bound_search
from .funcspace import GeneratorProfile, TestFunction
from .functionals import check_axioms, derived_t3, derived_t4, functional_from_dict
from .measure import weight_from_json
from .proofsteps import STEP_IDS, run_suite
from .statements import (StatementInstance, evaluate, instance_from_dict, instance_to_dict,
                         t3_derived_weight, t4_derived_weight, validate)

SCHEMA = 1
COMMANDS = ("axioms", "eval", "estimate", "oracle", "proofsteps", "chain", "report")

# -- default configs ------------------------------------------------------------

_ONE = {"segments": [{"upto": "inf", "c": 1.0, "gamma": 0.0}]}
_CHI01 = {"segments": [{"upto": 1.0, "c": 1.0, "gamma": 0.0}, {"upto": "inf", "c": 0.0, "gamma": 0.0}]}
_FINITE_MASS = {"segments": [{"upto": 1.0, "c": 1.0, "gamma": 0.0}, {"upto": "inf", "c": 1.0, "gamma": -2.0}]}
_SQRT = {"segments": [{"upto": "inf", "c": 1.0, "gamma": 0.5}]}

_CLASSICAL = {"id": "T1.i", "params": {"p": 2.0}, "weight": _ONE,
              "functional": {"kind": "Lq", "q": 2.0, "outer_weight": _ONE}}
_CHAIN = {"id": "T1.i", "params": {"p": 2.0, "r": 1.0, "alpha": 0.0, "beta": 1.0},
          "weight": _FINITE_MASS, "functional": {"kind": "Lq", "q": 2.0, "outer_weight": _CHI01}}


def _lq_entry(q) -> dict:
    # head exponents keep int_0^1 f^q finite; sup norms need bounded f
    head = 0.0 if q == "inf" else -1.0 / q + 0.1
    return {"name": f"Lq(q={q})", "functional": {"kind": "Lq", "q": q, "outer_weight": _CHI01},
            "profile": {"head_min": head}}


def _derived_entry(kind: str) -> dict:
    base = {"kind": "Lq", "q": 2.0, "outer_weight": _CHI01}
    return {"name": f"{kind}(m=2)", "functional": {"kind": kind, "base": base, "m": 2.0,
                                                   "u": _SQRT, "v": _ONE, "p": 2.0},
            "profile": {"head_min": -0.15}}


DEFAULTS = {
    "axioms": {"seed": 0, "trials": 1000, "rel_tol": 1e-9,
               "functionals": [_lq_entry(1.0), _lq_entry(2.0), _lq_entry("inf"), _lq_entry(0.5),
                               _derived_entry("derived-T3"), _derived_entry("derived-T4")]},
    "eval": {"seed": 0, "instance": _CLASSICAL, "positivize_eps": None,
             "f": {"segments": [{"upto": 1.0, "c": 1.0, "gamma": 0.0},
                                {"upto": "inf", "c": 1.0, "gamma": -1.0}]}},
    "estimate": {"seed": 0, "instance": _CLASSICAL, "budget": 10000,
                 "oracle": {"n": 2048, "window": [1e-4, 1e4]}},
    "oracle": {"seed": 0, "instance": _CLASSICAL, "n": 2048, "window": [1e-4, 1e4]},
    "proofsteps": {"seed": 0, "trials": 1000, "steps": list(STEP_IDS), "tol": None},
    "chain": {"seed": 0, "instance": _CHAIN, "n_samples": 200},
    "report": {"seed": 0, "inputs": None},
}

# -- JSON helpers -------------------------------------------------------------------


def _plain(x):
    """numpy scalars to Python, non-finite floats to strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_plain(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return "nan"
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return x


def dumps(obj) -> str:
    return json.dumps(_plain(obj), sort_keys=True, indent=2, allow_nan=False) + "\n"


def config_digest(config: dict) -> str:
    canon = json.dumps(_plain(config), sort_keys=True, separators=(",", ":"), allow_nan=False)
    return hashlib.sha256(canon.encode()).hexdigest()


def write_atomic(path: str, text: str) -> None:
    d = os.path.dirname(os.path.abspath(path))
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# -- config parsing -------------------------------------------------------------------

def _field(d: dict, key: str, where: str):
    if not isinstance(d, dict):
        raise InvalidConfig(f"{where}: expected an object")
    if key not in d:
        raise InvalidConfig(f"{where}.{key}: missing")
    return d[key]


def _num(x, where: str, integer: bool = False, positive: bool = False):
    try:
        v = int(x) if integer else float(x)
    except (TypeError, ValueError):
        raise InvalidConfig(f"{where}: expected a number, got {x!r}") from None
    if integer and v != x:
        raise InvalidConfig(f"{where}: expected an integer, got {x!r}")
    if positive and not v > 0:
        raise InvalidConfig(f"{where}: must be positive, got {x!r}")
    return v


def build_functional(d: dict, where: str = "functional"):
    """Functional from a descriptor; derived kinds may name the weight pair (u, v, p)."""
    try:
        if d.get("kind") in ("derived-T3", "derived-T4") and "u" in d:
            base = build_functional(_field(d, "base", where), f"{where}.base")
            m = _num(_field(d, "m", where), f"{where}.m", positive=True)
            u = weight_from_json(_field(d, "u", where))
            v = weight_from_json(_field(d, "v", where))
            p = _num(_field(d, "p", where), f"{where}.p", positive=True)
            if d["kind"] == "derived-T3":
                return derived_t3(base, m, t3_derived_weight(u, v, p))
            _, Ut = t4_derived_weight(u, v, p)
            return derived_t4(base, m, u.primitive_fn, Ut)
        return functional_from_dict(d)
    except InvalidConfig:
        raise
    except (KeyError, TypeError, ValueError, AttributeError, UnsupportedFunctional) as exc:
        raise InvalidConfig(f"{where}: {exc}") from None


def build_instance(d: dict, where: str = "instance") -> StatementInstance:
    for key in ("id", "params", "weight", "functional"):
        _field(d, key, where)
    try:
        inst = instance_from_dict(d)
    except (KeyError, TypeError, ValueError, SubmonotoneError) as exc:
        raise InvalidConfig(f"{where}: {exc}") from None
    problems = validate(inst)
    if problems:
        raise InvalidConfig(f"{where}.params: " + "; ".join(problems))
    return inst


def build_profile(d: dict | None, seed: int, where: str) -> GeneratorProfile:
    d = dict(d or {})
    kw = {}
    for key in ("segments", "exponents", "coefs"):
        if key in d:
            kw[key] = tuple(d.pop(key))
    for key in ("head_min", "tail_max", "zero_tail_prob"):
        if key in d:
            kw[key] = float(d.pop(key))
    if d:
        raise InvalidConfig(f"{where}: unknown field(s) {sorted(d)}")
    try:
        return GeneratorProfile(seed=seed, **kw)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(f"{where}: {exc}") from None


def _subseed(seed: int, k: int) -> int:
    return int(np.random.SeedSequence([seed, k]).generate_state(1)[0])


# -- commands ------------------------------------------------------------------------
# each returns (result, violation count)

def cmd_axioms(cfg: dict, args):
    seed = cfg["seed"]
    trials = _num(cfg.get("trials", 1000), "trials", integer=True, positive=True)
    rel_tol = args.tol if args.tol is not None else _num(cfg.get("rel_tol", 1e-9), "rel_tol", positive=True)
    entries = _field(cfg, "functionals", "config")
    rows, bad = [], 0
    for k, e in enumerate(entries):
        where = f"functionals[{k}]"
        rho = build_functional(_field(e, "functional", where), f"{where}.functional")
        prof = build_profile(e.get("profile"), _subseed(seed, k), f"{where}.profile")
        rep = check_axioms(rho, prof, trials, rel_tol)
        failed = rep.lattice_violations + int(not np.isfinite(rep.K))
        bad += failed
        rows.append({"name": e.get("name", str(k)), "K": rep.K, **rep.to_dict(), "violations": failed})
    return {"functionals": rows}, bad


def cmd_eval(cfg: dict, args):
    inst = build_instance(_field(cfg, "instance", "config"))
    try:
        f = TestFunction.from_dict(_field(cfg, "f", "config"))
    except (KeyError, TypeError, ValueError) as exc:
        raise InvalidConfig(f"f: {exc}") from None
    eps = cfg.get("positivize_eps")
    rec = evaluate(inst, f, positivize_eps=None if eps is None else _num(eps, "positivize_eps", positive=True))
    return {"instance": instance_to_dict(inst), **rec.to_dict()}, 0


def _oracle_args(d: dict, where: str):
    n = _num(d.get("n", 2048), f"{where}.n", integer=True, positive=True)
    window = d.get("window", [1e-4, 1e4])
    if not (isinstance(window, list) and len(window) == 2 and 0 < window[0] < window[1]):
        raise InvalidConfig(f"{where}.window: expected [t_min, t_max] with 0 < t_min < t_max")
    return n, (float(window[0]), float(window[1]))


def cmd_estimate(cfg: dict, args):
    inst = build_instance(_field(cfg, "instance", "config"))
    budget = _num(cfg.get("budget", 10000), "budget", integer=True, positive=True)
    est = lower_bound_search(inst, budget=budget, seed=cfg["seed"])
    if cfg.get("oracle") is not None:
        n, window = _oracle_args(cfg["oracle"], "oracle")
        try:
            out = discrete_oracle(inst, n=n, window=window, detail=True)
            est.oracle, est.oracle_n, est.oracle_converged = out["value"], n, out["converged"]
        except UnsupportedFunctional:
            pass
    return est.to_dict(instance_to_dict(inst)), 0


def cmd_oracle(cfg: dict, args):
    inst = build_instance(_field(cfg, "instance", "config"))
    n, window = _oracle_args(cfg, "config")
    out = discrete_oracle(inst, n=n, window=window, detail=True)
    return {"instance": instance_to_dict(inst), "oracle": out}, 0


def cmd_proofsteps(cfg: dict, args):
    trials = _num(cfg.get("trials", 1000), "trials", integer=True, positive=True)
    steps = cfg.get("steps") or list(STEP_IDS)
    unknown = [s for s in steps if s not in STEP_IDS]
    if unknown:
        raise InvalidConfig(f"steps: unknown step(s) {unknown}")
    tol = args.tol if args.tol is not None else cfg.get("tol")
    if tol is not None:
        tol = _num(tol, "tol", positive=True)
    res = run_suite(trials, cfg["seed"], steps, tol)
    return {"steps": res}, sum(r["violations"] for r in res)


def cmd_chain(cfg: dict, args):
    inst = build_instance(_field(cfg, "instance", "config"))
    n = _num(cfg.get("n_samples", 200), "n_samples", integer=True, positive=True)
    rep = chain_verify(inst, n_samples=n, seed=cfg["seed"], self_test=args.self_test)
    return rep, rep["violations"]


_SUMMARY_FIELDS = ["file", "command", "version", "config_digest", "status", "violations"]


def cmd_report(cfg: dict, args):
    inputs = cfg.get("inputs")
    if inputs is None:
        inputs = sorted(os.path.join(args.out, f) for f in os.listdir(args.out)
                        if f.endswith(".json") and f != "report.json") if os.path.isdir(args.out) else []
    rows, bad = [], 0
    for path in inputs:
        try:
            with open(path, encoding="utf-8") as fh:
                rep = json.load(fh)
        except (OSError, ValueError) as exc:
            raise InvalidConfig(f"inputs: cannot read {path}: {exc}") from None
        if rep.get("schema") != SCHEMA:
            raise InvalidConfig(f"inputs: {path} has schema {rep.get('schema')!r}, expected {SCHEMA}")
        rows.append({"file": os.path.basename(path), "command": rep["command"], "version": rep["version"],
                     "config_digest": rep["config_digest"], "status": rep["status"],
                     "violations": rep["violations"]})
        bad += int(rep["violations"])
    buf = io.StringIO()
    wr = csv.DictWriter(buf, fieldnames=_SUMMARY_FIELDS, lineterminator="\n")
    wr.writeheader()
    wr.writerows(rows)
    write_atomic(os.path.join(args.out, "summary.csv"), buf.getvalue())
    return {"reports": rows}, bad


HANDLERS = {"axioms": cmd_axioms, "eval": cmd_eval, "estimate": cmd_estimate, "oracle": cmd_oracle,
            "proofsteps": cmd_proofsteps, "chain": cmd_chain, "report": cmd_report}


# -- driver --------------------------------------------------------------------------

def load_config(command: str, path: str | None, seed: int | None) -> dict:
    if path is None:
        cfg = copy.deepcopy(DEFAULTS[command])
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise InvalidConfig(f"--config: {exc}") from None
        except ValueError as exc:
            raise InvalidConfig(f"--config: not valid JSON ({exc})") from None
        if not isinstance(cfg, dict):
            raise InvalidConfig("config: expected a JSON object")
    if seed is not None:
        cfg["seed"] = seed
    if "seed" not in cfg:
        raise InvalidConfig("seed: missing (give it in the config or with --seed)")
    s = cfg["seed"]
    if isinstance(s, bool) or not isinstance(s, int) or not 0 <= s < 2 ** 64:
        raise InvalidConfig(f"seed: expected an unsigned 64-bit integer, got {s!r}")
    return cfg


def run(command: str, cfg: dict, args) -> tuple[dict, int]:
    """Execute ``command``; returns the report and the exit code."""
    result, bad = HANDLERS[command](cfg, args)
    effective = dict(cfg)
    if args.tol is not None:
        effective["tol_override"] = args.tol
    if args.self_test:
        effective["self_test"] = True
    report = {"schema": SCHEMA, "command": command, "version": __version__,
              "config_digest": config_digest(effective), "config": effective,
              "status": "violations" if bad else "clean", "violations": int(bad), "result": result}
    return report, (1 if bad else 0)


def parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="submonotone", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("--config", help="JSON config; the command's default config when omitted")
    ap.add_argument("--seed", type=int, help="seed (unsigned 64-bit), overrides the config")
    ap.add_argument("--out", default="reports", help="output directory (default: reports)")
    ap.add_argument("--tol", type=float, help="relative tolerance override")
    ap.add_argument("--self-test", action="store_true",
                    help="chain only: corrupt every bound by 0.01, violations expected")
    return ap


def main(argv=None) -> int:
    args = parser().parse_args(argv)
    try:
        if args.self_test and args.command != "chain":
            raise InvalidConfig("--self-test applies to the chain command only")
        if args.tol is not None and not args.tol > 0:
            raise InvalidConfig(f"--tol: must be positive, got {args.tol!r}")
        cfg = load_config(args.command, args.config, args.seed)
        report, code = run(args.command, cfg, args)
    except (InvalidConfig, MissingUpperBound, AllRatiosDegenerate) as exc:
        print(f"submonotone {args.command}: invalid config: {exc}", file=sys.stderr)
        return 2
    path = os.path.join(args.out, f"{args.command}.json")
    write_atomic(path, dumps(report))
    print(f"{args.command}: {report['status']} ({report['violations']} violations) -> {path}")
    return code


if __name__ == "__main__":
    sys.exit(main())
