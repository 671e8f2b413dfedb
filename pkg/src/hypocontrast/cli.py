"""Command-line front end: simulate, estimate, experiment, validate, precision.

Every command reads a strict JSON config.  Exit codes: 0 success, 2 config
error, 3 runtime failure.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass
from multiprocessing import get_context
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .builtins import get_model
from .contrast import ContrastObjective
from .estimate import AdamConfig, adam_minimize, asymptotic_precision, nelder_mead_maximize
from .kalman import marginal_loglik
from .model import ModelError, hormander_rank_check
from .moments import make_config
from .simulate import ObservationDesign, read_observations, simulate_observations, stride_of, write_observations


class ConfigError(Exception):
    pass


# schemas ---------------------------------------------------------------------

_NUMS = {"type": "array", "items": {"type": "number"}, "minItems": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}

_OPTIMIZER = {
    "oneOf": [
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"const": "adam"},
                "step": _POS,
                "beta1": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "beta2": {"type": "number", "minimum": 0, "exclusiveMaximum": 1},
                "eps": _POS,
                "iters": {"type": "integer", "minimum": 1},
            },
        },
        {
            "type": "object",
            "additionalProperties": False,
            "required": ["name"],
            "properties": {
                "name": {"const": "nelder-mead"},
                "tol": _POS,
                "max_evals": {"type": "integer", "minimum": 1},
                "edge": _POS,
            },
        },
    ]
}

_BOX = {
    "type": "object",
    "additionalProperties": False,
    "required": ["lo", "hi"],
    "properties": {"lo": _NUMS, "hi": _NUMS},
}

_DESIGN = {
    "type": "object",
    "additionalProperties": False,
    "required": ["delta", "t_horizon"],
    "properties": {"delta": _POS, "t_horizon": _POS, "fine_delta": _POS, "burn_in": {"type": "number", "minimum": 0}},
}

_MODE = {"enum": ["complete", "partial-fhn"]}

EXPERIMENT_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model_id", "design"],
    "properties": {
        "model_id": {"type": "string"},
        "true_theta": _NUMS,
        "theta_box": _BOX,
        "design": _DESIGN,
        "p_list": {"type": "array", "items": {"type": "integer", "minimum": 2}, "minItems": 1},
        "replications": {"type": "integer", "minimum": 1},
        "base_seed": {"type": "integer", "minimum": 0},
        "optimizer": _OPTIMIZER,
        "mode": _MODE,
        "theta0": _NUMS,
    },
}

ESTIMATE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model_id", "data"],
    "properties": {
        "model_id": {"type": "string"},
        "data": {"type": "string"},
        "p": {"type": "integer", "minimum": 2},
        "theta0": _NUMS,
        "theta_box": _BOX,
        "optimizer": _OPTIMIZER,
        "mode": _MODE,
        "keep_trace": {"type": "boolean"},
    },
}

VALIDATE_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model_id"],
    "properties": {
        "model_id": {"type": "string"},
        "theta": _NUMS,
        "points": {"type": "integer", "minimum": 1},
        "seed": {"type": "integer", "minimum": 0},
    },
}

PRECISION_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["model_id"],
    "properties": {
        "model_id": {"type": "string"},
        "theta": _NUMS,
        "p": {"type": "integer", "minimum": 2},
        "design": _DESIGN,
        "data": {"type": "string"},
        "base_seed": {"type": "integer", "minimum": 0},
    },
}


def validate_config(cfg: dict, schema: dict) -> dict:
    try:
        jsonschema.validate(cfg, schema)
    except jsonschema.ValidationError as e:
        where = "/".join(str(p) for p in e.absolute_path) or "<root>"
        raise ConfigError(f"config field {where}: {e.message}") from None
    return cfg


def load_config(path, schema: dict) -> dict:
    try:
        cfg = json.loads(Path(path).read_text())
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except json.JSONDecodeError as e:
        raise ConfigError(f"config file {path} is not valid JSON: {e}") from None
    return validate_config(cfg, schema)


def config_hash(cfg: dict) -> str:
    return hashlib.sha256(json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()).hexdigest()


# resolved experiment settings --------------------------------------------------


@dataclass(frozen=True)
class Resolved:
    model_id: str
    true_theta: tuple
    lo: tuple
    hi: tuple
    delta: float
    n: int
    fine_delta: float
    burn_in: float
    p_list: tuple
    replications: int
    base_seed: int
    optimizer: dict
    mode: str
    theta0: tuple

    def model(self):
        m = get_model(self.model_id)
        m.layout = m.layout.with_box(self.lo, self.hi)
        return m

    def design(self, seed: int) -> ObservationDesign:
        return ObservationDesign(self.delta, self.n, self.fine_delta, seed, self.burn_in)


def _model_or_config_error(model_id):
    try:
        return get_model(model_id)
    except ModelError as e:
        raise ConfigError(str(e)) from None


def _vector(values, size, what):
    v = tuple(float(a) for a in values)
    if len(v) != size:
        raise ConfigError(f"{what} needs {size} entries, got {len(v)}")
    return v


def _box(cfg, model):
    lay = model.layout
    if "theta_box" not in cfg:
        return tuple(lay.lo_array.tolist()), tuple(lay.hi_array.tolist())
    lo = _vector(cfg["theta_box"]["lo"], lay.size, "theta_box.lo")
    hi = _vector(cfg["theta_box"]["hi"], lay.size, "theta_box.hi")
    if any(a >= b for a, b in zip(lo, hi)):
        raise ConfigError("theta_box.lo must be below theta_box.hi in every coordinate")
    return lo, hi


def _start(cfg, lo, hi, size):
    if "theta0" in cfg:
        t0 = _vector(cfg["theta0"], size, "theta0")
    else:
        t0 = tuple(0.5 * (a + b) for a, b in zip(lo, hi))
    if any(not a <= t <= b for t, a, b in zip(t0, lo, hi)):
        raise ConfigError(f"theta0 {list(t0)} lies outside the box")
    return t0


def _optimizer(cfg, mode):
    opt = dict(cfg.get("optimizer", {"name": "nelder-mead" if mode == "partial-fhn" else "adam"}))
    if mode == "partial-fhn" and opt["name"] != "nelder-mead":
        raise ConfigError("partial-fhn mode needs the nelder-mead optimizer (no gradient is available)")
    return opt


def _mode_checks(mode, model, p_list):
    if mode == "partial-fhn":
        if model.id != "fhn":
            raise ConfigError(f"partial-fhn mode needs model_id 'fhn', got {model.id!r}")
        bad = [p for p in p_list if p not in (2, 3)]
        if bad:
            raise ConfigError(f"partial-fhn supports p in (2, 3), got {bad}")
    else:
        bad = [p for p in p_list if p > model.max_p]
        if bad:
            raise ConfigError(f"{model.id} supports p in 2..{model.max_p}, got {bad}")


def resolve_experiment(cfg: dict, seed: int | None = None) -> Resolved:
    validate_config(cfg, EXPERIMENT_SCHEMA)
    model = _model_or_config_error(cfg["model_id"])
    size = model.layout.size
    if "true_theta" in cfg:
        tt = _vector(cfg["true_theta"], size, "true_theta")
    elif model.true_theta is not None:
        tt = tuple(float(v) for v in model.true_theta)
    else:
        raise ConfigError(f"true_theta is required for model {model.id}")
    lo, hi = _box(cfg, model)
    d = cfg["design"]
    fine = float(d.get("fine_delta", 1e-4))
    delta = float(d["delta"])
    ratio = d["t_horizon"] / delta
    n = int(round(ratio))
    if abs(ratio - n) > 1e-9 * ratio or n < 2:
        raise ConfigError(f"design.t_horizon={d['t_horizon']} is not a multiple (>= 2) of design.delta={delta}")
    try:
        stride_of(delta, fine)
    except ValueError as e:
        raise ConfigError(f"design: {e}") from None
    mode = cfg.get("mode", "complete")
    p_list = tuple(cfg.get("p_list", [2]))
    _mode_checks(mode, model, p_list)
    return Resolved(
        model.id, tt, lo, hi, delta, n, fine, float(d.get("burn_in", 10.0)), p_list,
        int(cfg.get("replications", 1)), int(cfg.get("base_seed", 0) if seed is None else seed),
        _optimizer(cfg, mode), mode, _start(cfg, lo, hi, size),
    )


# estimation ------------------------------------------------------------------------


def fit(model, states, delta, p, theta0, optimizer: dict, mode: str = "complete", keep_trace: bool = False):
    """One estimation on one dataset; returns an EstimationResult."""
    box = model.box()
    opts = {k: v for k, v in optimizer.items() if k != "name"}
    if mode == "partial-fhn":
        xs = np.ascontiguousarray(states[:, 0])
        return nelder_mead_maximize(
            lambda th: marginal_loglik(xs, th, delta, p, raise_on_error=False), theta0, box,
            keep_trace=keep_trace, **opts,
        )
    obj = ContrastObjective(model, make_config(model, p), (states, delta))
    if optimizer["name"] == "adam":
        return adam_minimize(obj, theta0, AdamConfig(**opts), box, keep_trace=keep_trace)

    def neg(th):
        v, ok = obj.value(th)
        return -v if ok else -np.inf

    res = nelder_mead_maximize(neg, theta0, box, keep_trace=keep_trace, **opts)
    res.value = -res.value
    return res


def run_replication(res: Resolved, index: int) -> list[dict]:
    """Simulate replication ``index`` and fit every p; failures become rows."""
    model = res.model()
    seed = res.base_seed + index
    rows = []
    try:
        obs = simulate_observations(model, res.true_theta, res.design(res.base_seed), 1, index)[0]
    except Exception as e:  # noqa: BLE001 - recorded in the report
        return [_row(res, seed, p, None, f"simulation_failed: {e}") for p in res.p_list]
    for p in res.p_list:
        try:
            r = fit(model, obs.states, res.delta, p, res.theta0, res.optimizer, res.mode)
        except Exception as e:  # noqa: BLE001
            rows.append(_row(res, seed, p, None, f"estimation_failed: {type(e).__name__}: {e}"))
            continue
        rows.append(_row(res, seed, p, r, "ok" if r.converged else "not_converged"))
    return rows


def _row(res, seed, p, r, status):
    row = {"seed": seed, "p": p, "status": status}
    if r is None:
        row.update(theta_hat=None, value=None, n_evals=0, converged=False, runtime=0.0)
    else:
        row.update(theta_hat=[float(v) for v in r.theta_hat], value=float(r.value), n_evals=int(r.n_evals),
                   converged=bool(r.converged), runtime=float(r.runtime))
    return row


def _worker_env():
    # one XLA thread per worker so k jobs use k cores
    flags = os.environ.get("XLA_FLAGS", "")
    if "intra_op_parallelism_threads" not in flags:
        os.environ["XLA_FLAGS"] = (flags + " --xla_cpu_multi_thread_eigen=false intra_op_parallelism_threads=1").strip()


def run_experiment(res: Resolved, jobs: int = 1) -> list[dict]:
    """All replications; rows sorted by (seed, p) regardless of scheduling."""
    idx = list(range(res.replications))
    if jobs > 1 and len(idx) > 1:
        _worker_env()
        with ProcessPoolExecutor(min(jobs, len(idx)), mp_context=get_context("spawn")) as ex:
            parts = list(ex.map(run_replication, [res] * len(idx), idx))
    else:
        parts = [run_replication(res, i) for i in idx]
    rows = [r for part in parts for r in part]
    return sorted(rows, key=lambda r: (r["seed"], r["p"]))


def _usable(row):
    # estimates from non-converged runs are kept; only failed runs carry no theta
    return row["theta_hat"] is not None


def summarize(res: Resolved, rows: list[dict], names) -> list[dict]:
    out = []
    tt = np.asarray(res.true_theta)
    for p in res.p_list:
        err = np.array([np.asarray(r["theta_hat"]) - tt for r in rows if r["p"] == p and _usable(r)])
        m = err.shape[0]
        for k, name in enumerate(names):
            col = err[:, k] if m else np.array([])
            out.append({
                "p": p,
                "parameter": name,
                "M_effective": m,
                "mean_error": float(col.mean()) if m else float("nan"),
                "sd_error": float(col.std(ddof=1)) if m > 1 else float("nan"),
            })
    return out


def _g(v):
    return "" if v is None else f"{v:.17g}"


def report_csv(res: Resolved, rows: list[dict], names) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["seed", "p", "status", "converged"] + [f"{n}_hat" for n in names] + [f"{n}_error" for n in names]
               + ["value", "n_evals"])
    for r in rows:
        th = r["theta_hat"]
        hat = [_g(v) for v in th] if th is not None else [""] * len(names)
        err = [_g(v - t) for v, t in zip(th, res.true_theta)] if th is not None else [""] * len(names)
        w.writerow([r["seed"], r["p"], r["status"], int(r["converged"])] + hat + err + [_g(r["value"]), r["n_evals"]])
    return buf.getvalue()


def summary_csv(summary: list[dict]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["p", "parameter", "M_effective", "mean_error", "sd_error"])
    for s in summary:
        w.writerow([s["p"], s["parameter"], s["M_effective"], _g(s["mean_error"]), _g(s["sd_error"])])
    return buf.getvalue()


def _provenance(cfg):
    return {"config_sha256": config_hash(cfg), "version": __version__}


def _write_json(path: Path, obj):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n")


# commands ---------------------------------------------------------------------------


def cmd_simulate(cfg: dict, out: Path, seed: int | None = None) -> list[Path]:
    res = resolve_experiment(cfg, seed)
    model = res.model()
    written = []
    for i in range(res.replications):
        obs = simulate_observations(model, res.true_theta, res.design(res.base_seed), 1, i)[0]
        obs.meta["provenance"] = _provenance(cfg)
        path, _ = write_observations(obs, out / f"{model.id}_seed{obs.design.seed}.csv")
        written.append(path)
    return written


def cmd_estimate(cfg: dict, out: Path, base: Path = Path(".")) -> dict:
    validate_config(cfg, ESTIMATE_SCHEMA)
    model = _model_or_config_error(cfg["model_id"])
    lo, hi = _box(cfg, model)
    model.layout = model.layout.with_box(lo, hi)
    mode = cfg.get("mode", "complete")
    p = int(cfg.get("p", 2))
    _mode_checks(mode, model, (p,))
    theta0 = _start(cfg, lo, hi, model.layout.size)
    opt = _optimizer(cfg, mode)
    data = Path(cfg["data"])
    data = data if data.is_absolute() else base / data
    try:
        obs = read_observations(data)
    except (OSError, ValueError) as e:
        raise ConfigError(f"cannot read data file {data}: {e}") from None
    if obs.states.shape[1] != model.mclass.N:
        raise ConfigError(f"data has {obs.states.shape[1]} state columns, model {model.id} has N={model.mclass.N}")
    if mode == "complete":
        v, ok = ContrastObjective(model, make_config(model, p), obs).value(np.asarray(theta0))
        if not ok:
            raise ModelError(f"contrast is not finite at theta0={list(theta0)} (leading covariance not positive definite)")
    r = fit(model, obs.states, obs.delta, p, theta0, opt, mode, keep_trace=bool(cfg.get("keep_trace", False)))
    result = {
        "model_id": model.id,
        "p": p,
        "mode": mode,
        "names": list(model.layout.names),
        "theta0": list(theta0),
        "theta_hat": [float(v) for v in r.theta_hat],
        "value": float(r.value),
        "converged": bool(r.converged),
        "n_evals": int(r.n_evals),
        "runtime": float(r.runtime),
        "message": r.message,
        "optimizer": opt,
        "data": str(data),
        "data_seed": obs.design.seed,
        "provenance": _provenance(cfg),
    }
    if r.trace:
        result["trace"] = [{"value": float(v), "theta": [float(a) for a in th]} for v, th in r.trace]
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "estimate.json", result)
    return result


def cmd_experiment(cfg: dict, out: Path, seed: int | None = None, jobs: int = 1) -> tuple[list, list]:
    res = resolve_experiment(cfg, seed)
    names = res.model().layout.names
    t0 = time.time()
    rows = run_experiment(res, jobs)
    summary = summarize(res, rows, names)
    out.mkdir(parents=True, exist_ok=True)
    (out / "replications.csv").write_text(report_csv(res, rows, names))
    (out / "summary.csv").write_text(summary_csv(summary))
    side = {
        "provenance": _provenance(cfg),
        "resolved": asdict(res),
        "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "wall_seconds": time.time() - t0,
        "runtimes": [{"seed": r["seed"], "p": r["p"], "runtime": r["runtime"]} for r in rows],
    }
    _write_json(out / "experiment.json", side)
    return rows, summary


def cmd_validate(cfg: dict, out: Path | None = None) -> dict:
    """Run the model checks; failures are report content, not errors."""
    from . import oracle  # heavy-ish, only needed here
    from .moments import leading_covariance, sigma0_array

    validate_config(cfg, VALIDATE_SCHEMA)
    model = _model_or_config_error(cfg["model_id"])
    th = np.asarray(cfg.get("theta", model.true_theta if model.true_theta is not None else model.layout.midpoint()), float)
    if th.shape != (model.layout.size,):
        raise ConfigError(f"theta needs {model.layout.size} entries")
    rng = np.random.default_rng(cfg.get("seed", 0))
    N = model.mclass.N
    pts = rng.normal(size=(cfg.get("points", 20), N))
    checks = {}

    rank = hormander_rank_check(model, th, pts)
    worst = min(min(v for v in d.values()) for d in rank.min_singular_values)
    checks["hormander"] = {"passed": rank.passed, "margin": worst, "tol": rank.tol}

    err = 0.0
    for x in pts[:5]:
        for b in model.mclass.blocks:
            for k in range(1, model.orders[b] + 1):
                ref = oracle.ad_generator_iterate(model, k, b, x, th)
                err = max(err, float(np.max(np.abs(np.asarray(model.gen_mu(k, b, x, th)) - ref) / (1 + np.abs(ref)))))
        for b in model.mclass.smooth_blocks():
            for j in range(model.mclass.d):
                ref = oracle.ad_directional(model, j, b, x, th)
                err = max(err, float(np.max(np.abs(np.asarray(model.dir_mu(j, b, x, th)) - ref) / (1 + np.abs(ref)))))
    checks["operator_certification"] = {"passed": err < 1e-6, "margin": err, "tol": 1e-6}

    cfg2 = make_config(model, 2)
    ev_min = np.inf
    for x in pts:
        ev_min = min(ev_min, float(np.linalg.eigvalsh(np.asarray(sigma0_array(model, x, th)))[0]))
    checks["positive_definite"] = {"passed": bool(ev_min > 0), "margin": ev_min}

    if model.mclass.tag.value == "HypoII":
        import jax

        jac = jax.jit(jax.jacfwd(model.drift))
        sl = {b: model.mclass.block_slice(b) for b in model.mclass.blocks}
        e = 0.0
        try:
            for x in pts:
                c = leading_covariance(model, cfg2, x, th)
                L, J = c.lam, np.asarray(jac(x, th))
                d12, d2r = J[sl["S1"], sl["S2"]], J[sl["S2"], sl["R"]]
                e = max(e, np.abs(L[sl["S1"], sl["S1"]] @ d12 + 2 * L[sl["S1"], sl["S2"]]).max())
                e = max(e, np.abs(L[sl["S2"], sl["S2"]] - 12 * np.linalg.inv(c.blocks["a_S2"])
                                  + 0.5 * L[sl["S2"], sl["S1"]] @ d12).max())
                psi = np.vstack([d12 @ d2r / 6, d2r / 2, np.eye(model.mclass.block_size("R"))])
                tgt = np.zeros_like(psi)
                tgt[sl["R"]] = np.linalg.inv(c.blocks["a_R"])
                e = max(e, np.abs(L @ psi - tgt).max())
                e = max(e, np.abs(L[sl["S1"], sl["S1"]] - 720 * np.linalg.inv(c.blocks["a_S1"])).max())
            checks["matrix_identities"] = {"passed": bool(e < 1e-10), "margin": float(e), "tol": 1e-10}
        except ModelError as ex:
            checks["matrix_identities"] = {"passed": False, "margin": None, "error": str(ex)}

    report = {
        "model_id": model.id,
        "theta": th.tolist(),
        "checks": checks,
        "passed": all(c["passed"] for c in checks.values()),
        "provenance": _provenance(cfg),
    }
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        _write_json(out / "validate.json", report)
    return report


def cmd_precision(cfg: dict, out: Path, seed: int | None = None, base: Path = Path(".")) -> dict:
    validate_config(cfg, PRECISION_SCHEMA)
    model = _model_or_config_error(cfg["model_id"])
    th = _vector(cfg.get("theta", model.true_theta or []), model.layout.size, "theta")
    p = int(cfg.get("p", 2))
    _mode_checks("complete", model, (p,))
    if "data" in cfg:
        data = Path(cfg["data"])
        obs = read_observations(data if data.is_absolute() else base / data)
    elif "design" in cfg:
        sub = {"model_id": model.id, "design": cfg["design"], "true_theta": list(th)}
        res = resolve_experiment(sub, seed if seed is not None else cfg.get("base_seed", 0))
        obs = simulate_observations(model, th, res.design(res.base_seed))[0]
    else:
        raise ConfigError("precision needs either 'data' or 'design'")
    pm = asymptotic_precision(model, make_config(model, p), obs, th)
    result = {
        "model_id": model.id,
        "names": list(model.layout.names),
        "theta": list(th),
        "n": obs.design.n,
        "delta": obs.delta,
        "gamma": pm.gamma.tolist(),
        "rates": pm.rate_matrix.tolist(),
        "standard_errors": pm.standard_errors().tolist(),
        "provenance": _provenance(cfg),
    }
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "precision.json", result)
    return result


# entry point ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="hypocontrast", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("simulate", "estimate", "experiment", "validate", "precision"):
        sp = sub.add_parser(name)
        sp.add_argument("--config", required=name != "validate", help="JSON config file")
        sp.add_argument("--out", default="out", help="output directory")
        sp.add_argument("--jobs", type=int, default=1)
        sp.add_argument("--seed", type=int, default=None, help="overrides base_seed")
        if name == "validate":
            sp.add_argument("--model", help="model id (instead of a config)")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out = Path(args.out)
    try:
        if args.seed is not None and args.seed < 0:
            raise ConfigError("--seed must be non-negative")
        if args.command == "validate" and args.config is None:
            if not args.model:
                raise ConfigError("validate needs --config or --model")
            cfg = {"model_id": args.model}
        else:
            cfg = load_config(args.config, {
                "simulate": EXPERIMENT_SCHEMA, "experiment": EXPERIMENT_SCHEMA, "estimate": ESTIMATE_SCHEMA,
                "validate": VALIDATE_SCHEMA, "precision": PRECISION_SCHEMA,
            }[args.command])
        if args.seed is not None and args.command in ("simulate", "experiment", "precision"):
            cfg = dict(cfg, base_seed=args.seed)
        base = Path(args.config).parent if args.config else Path(".")
        if args.command == "simulate":
            for p in cmd_simulate(cfg, out):
                print(p)
        elif args.command == "estimate":
            r = cmd_estimate(cfg, out, base)
            print(json.dumps({k: r[k] for k in ("theta_hat", "value", "converged")}))
        elif args.command == "experiment":
            _, summary = cmd_experiment(cfg, out, jobs=args.jobs)
            sys.stdout.write(summary_csv(summary))
        elif args.command == "validate":
            r = cmd_validate(cfg, out)
            for name, c in r["checks"].items():
                print(f"{name}: {'pass' if c['passed'] else 'FAIL'} (margin {c.get('margin')})")
        else:
            r = cmd_precision(cfg, out, base=base)
            print(json.dumps({"names": r["names"], "standard_errors": r["standard_errors"]}))
    except ConfigError as e:
        print(f"config error: {e}", file=sys.stderr)
        return 2
    except (ModelError, RuntimeError, ValueError, ArithmeticError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    sys.exit(main())
