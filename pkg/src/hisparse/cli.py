"""Command-line entry point.

Subcommands: recover (run hihtp on a described operator), experiment
(Monte Carlo detection sweep to CSV), rip / incoherence (constants for
matrices stored in the text fixture format), project (best hi-sparse
approximation of a stored block vector).

Configs are strict JSON: unknown keys are hard errors, defaults are filled
in and echoed into every output so a run can be replayed from its output
alone. Outputs are written atomically (temp file + rename). Exit codes:
0 success, 1 failure (with a single `category: message` line on stderr),
2 usage errors.
"""

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import simulation
from .analysis import EnumerationCapExceeded, exact_rip, monte_carlo_rip, pairwise_incoherence
from .matrix_io import format_scalar, parse_scalar, read_matrix
from .model import BlockVector, SparsityPattern
from .operators import from_descriptor
from .projection import project_hi_sparse
from .solver import SolverConfig, SolverDivergence, hihtp

SEED_ENV_VAR = "HISPARSE_SEED"

_REQUIRED = object()


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------- config


def _type_name(kinds):
    names = {int: "integer", float: "number", str: "string", list: "list",
             dict: "object", bool: "boolean"}
    return " or ".join(names.get(k, k.__name__) for k in kinds)


def _check_no_unknown(obj, allowed, context):
    unknown = sorted(set(obj) - set(allowed))
    if unknown:
        raise ConfigError(
            f"unknown key {unknown[0]!r} in {context}; allowed keys: {sorted(allowed)}"
        )


def _get(obj, key, kinds, default=_REQUIRED, context="config"):
    if key not in obj:
        if default is _REQUIRED:
            raise ConfigError(f"missing required key {key!r} in {context}")
        return default
    val = obj[key]
    if bool not in kinds and isinstance(val, bool):
        raise ConfigError(f"key {key!r} in {context} must be {_type_name(kinds)}")
    if float in kinds and isinstance(val, int):
        val = float(val)
    if not isinstance(val, tuple(kinds)):
        raise ConfigError(
            f"key {key!r} in {context} must be {_type_name(kinds)}, "
            f"got {type(val).__name__}"
        )
    return val


def _int_list(obj, key, context, default=_REQUIRED):
    val = _get(obj, key, (int, list), default, context)
    if val is default and default is not _REQUIRED:
        return val
    if isinstance(val, int):
        return [val]
    if not val or not all(isinstance(v, int) and not isinstance(v, bool) for v in val):
        raise ConfigError(f"key {key!r} in {context} must be an integer or a "
                          "nonempty list of integers")
    return list(val)


def _load_json(path):
    try:
        with open(path, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from exc
    if not text.strip():
        raise ConfigError(f"{path} is empty; expected a JSON object")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return obj


def _solver_section(cfg, context, default_stepsize="adaptive", allow_scaled=False):
    sub = _get(cfg, "solver", (dict,), {}, context)
    _check_no_unknown(sub, {"stepsize", "tolerance", "max_iterations"}, f"{context}.solver")
    stepsize = sub.get("stepsize", default_stepsize)
    allowed_names = ("adaptive", "scaled") if allow_scaled else ("adaptive",)
    if not (stepsize in allowed_names
            or (isinstance(stepsize, (int, float)) and not isinstance(stepsize, bool)
                and stepsize > 0)):
        names = " or ".join(repr(n) for n in allowed_names)
        raise ConfigError(
            f"key 'stepsize' in {context}.solver must be {names} or a positive number"
        )
    tolerance = _get(sub, "tolerance", (float,), 1e-6, f"{context}.solver")
    max_iterations = _get(sub, "max_iterations", (int,), 100, f"{context}.solver")
    if tolerance < 0 or max_iterations < 1:
        raise ConfigError(f"invalid solver settings in {context}")
    return {"stepsize": stepsize, "tolerance": tolerance,
            "max_iterations": max_iterations}


def _resolve_seed(flag_seed, config_seed):
    if flag_seed is not None:
        return int(flag_seed)
    if config_seed is not None:
        return int(config_seed)
    env = os.environ.get(SEED_ENV_VAR)
    if env is not None:
        try:
            return int(env)
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV_VAR} must be an integer, got {env!r}") from exc
    return 0


def parse_experiment_config(raw, seed_override=None):
    """Validate and fully default an experiment sweep config."""
    allowed = {"n", "m", "M", "N", "sigma", "trials", "assignment", "seed",
               "mixing_variance", "snr_db", "solver"}
    _check_no_unknown(raw, allowed, "experiment config")
    n = _get(raw, "n", (int,), 512)
    m = _get(raw, "m", (int,), 256)
    M = _get(raw, "M", (int,), 16)
    N_values = _int_list(raw, "N", "experiment config", [8, 16, 24, 32])
    sigma_values = _int_list(raw, "sigma", "experiment config", [16, 24, 32, 36])
    trials = _get(raw, "trials", (int,), 25)
    assignment = _get(raw, "assignment", (str,), "fixedPerGroup")
    if assignment not in simulation.ASSIGNMENTS:
        raise ConfigError(
            f"key 'assignment' must be one of {simulation.ASSIGNMENTS}"
        )
    mixing_variance = _get(raw, "mixing_variance", (float, type(None)), None)
    snr_db = _get(raw, "snr_db", (float, type(None)), None)
    solver = _solver_section(raw, "experiment config",
                             default_stepsize="scaled", allow_scaled=True)
    seed = _resolve_seed(seed_override, raw.get("seed"))
    resolved = {
        "n": n, "m": m, "M": M, "N": N_values, "sigma": sigma_values,
        "trials": trials, "assignment": assignment, "seed": seed,
        "mixing_variance": mixing_variance, "snr_db": snr_db, "solver": solver,
    }
    sweep = simulation.SweepConfig(
        n=n, m=m, M=M, N_values=tuple(N_values), sigma_values=tuple(sigma_values),
        trials=trials, assignment=assignment, seed=seed,
        mixing_variance=mixing_variance, snr_db=snr_db,
        stepsize=solver["stepsize"], tolerance=solver["tolerance"],
        max_iterations=solver["max_iterations"],
    )
    return sweep, resolved


def parse_recover_config(raw, seed_override=None):
    _check_no_unknown(raw, {"operator", "pattern", "measurements", "solver", "seed"},
                      "recover config")
    op = _get(raw, "operator", (dict,), context="recover config")
    _check_no_unknown(op, {"mixing", "blocks"}, "recover config.operator")
    mixing = _get(op, "mixing", (dict,), context="recover config.operator")
    blocks = _get(op, "blocks", (dict,), context="recover config.operator")
    _check_no_unknown(mixing, {"ensemble", "M", "N", "variance", "field", "seed"},
                      "operator.mixing")
    _check_no_unknown(blocks, {"ensemble", "m", "n", "seed", "replace", "phase",
                               "variance", "field"}, "operator.blocks")

    seed = _resolve_seed(seed_override, raw.get("seed"))
    mixing = dict(mixing)
    blocks = dict(blocks)
    mixing.setdefault("ensemble", "gaussian")
    mixing.setdefault("field", "complex")
    mixing.setdefault("seed", seed)
    blocks.setdefault("seed", seed + 1)
    for key in ("M", "N"):
        _get(mixing, key, (int,), context="operator.mixing")
    _get(mixing, "variance", (float,), context="operator.mixing")
    _get(blocks, "ensemble", (str,), context="operator.blocks")
    for key in ("m", "n"):
        _get(blocks, key, (int,), context="operator.blocks")
    try:
        H = from_descriptor(mixing, blocks)
    except (KeyError, ValueError) as exc:
        raise ConfigError(f"bad operator descriptor: {exc}") from exc

    pat = _get(raw, "pattern", (dict,), context="recover config")
    _check_no_unknown(pat, {"s", "sigma"}, "recover config.pattern")
    s = _get(pat, "s", (int,), context="pattern")
    sigma = _int_list(pat, "sigma", "pattern")
    if len(sigma) == 1:
        sigma = sigma * H.num_blocks
    if len(sigma) != H.num_blocks:
        raise ConfigError(
            f"pattern.sigma has {len(sigma)} entries for {H.num_blocks} blocks"
        )
    try:
        pattern = SparsityPattern(s, tuple(sigma), H.block_dims)
    except ValueError as exc:
        raise ConfigError(f"bad pattern: {exc}") from exc

    meas = _get(raw, "measurements", (list,), context="recover config")
    try:
        y = np.asarray([parse_scalar(v) if isinstance(v, str) else float(v)
                        for v in meas])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad measurements entry: {exc}") from exc
    if y.size != H.num_slots * H.block_rows:
        raise ConfigError(
            f"measurements must have length M*m = {H.num_slots * H.block_rows}, "
            f"got {y.size}"
        )

    solver = _solver_section(raw, "recover config")
    resolved = {
        "operator": {"mixing": mixing, "blocks": blocks},
        "pattern": {"s": s, "sigma": sigma},
        "measurements": list(meas), "solver": solver, "seed": seed,
    }
    return H, y, pattern, solver, resolved


def parse_block_vector(obj, context="input"):
    _check_no_unknown(obj, {"block_dims", "data"}, context)
    dims = _int_list(obj, "block_dims", context)
    data = _get(obj, "data", (list,), context=context)
    if len(data) != sum(dims):
        raise ConfigError(
            f"{context}: data length {len(data)} != sum(block_dims) {sum(dims)}"
        )
    try:
        flat = np.asarray([parse_scalar(v) if isinstance(v, str) else float(v)
                           for v in data])
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{context}: bad data entry: {exc}") from exc
    return BlockVector.from_flat(flat, dims)


# ---------------------------------------------------------------- output


def _write_atomic(path, text):
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix="~")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit_json(obj, output):
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    if output is None:
        sys.stdout.write(text)
    else:
        _write_atomic(output, text)


def _vector_json(x):
    flat = x.flatten()
    if np.iscomplexobj(flat):
        data = [format_scalar(complex(v)) for v in flat]
    else:
        data = [float(v) for v in flat]
    return {"block_dims": list(x.block_dims), "data": data}


# ---------------------------------------------------------------- commands


def _cmd_recover(args):
    raw = _load_json(args.config)
    H, y, pattern, solver, resolved = parse_recover_config(raw, args.seed)
    cfg = SolverConfig(pattern=pattern, stepsize=solver["stepsize"],
                       tolerance=solver["tolerance"],
                       max_iterations=solver["max_iterations"])
    result = hihtp(H, y, cfg)
    _emit_json({
        "config": resolved,
        "estimate": _vector_json(result.estimate),
        "support": [list(e) for e in result.support],
        "iterations": result.iterations,
        "residual_history": result.residual_history,
        "termination": result.termination,
        "rank_deficient": result.rank_deficient,
    }, args.output)
    return 0


def _cmd_experiment(args):
    raw = _load_json(args.config)
    sweep, resolved = parse_experiment_config(raw, args.seed)
    records, failures = simulation.run_sweep(sweep, jobs=args.jobs)
    fd, tmp = tempfile.mkstemp(
        dir=os.path.dirname(os.path.abspath(args.output)), prefix=".tmp-", suffix="~")
    os.close(fd)
    try:
        simulation.write_trials_csv(tmp, records, resolved, failures)
        os.replace(tmp, args.output)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    if failures:
        print(f"warning: {len(failures)} trial(s) failed and were excluded",
              file=sys.stderr)
    return 0


def _cmd_rip(args):
    B = read_matrix(args.matrix)
    seed = _resolve_seed(args.seed, None)
    if args.trials is None:
        est = exact_rip(B, args.sparsity)
        seed_used = None
    else:
        est = monte_carlo_rip(B, args.sparsity, args.trials,
                              np.random.default_rng(seed))
        seed_used = seed
    _emit_json({
        "kind": est.kind, "value": est.value, "trials": est.trials,
        "params": {"rows": int(B.shape[0]), "cols": int(B.shape[1]),
                   "sparsity": args.sparsity, "matrix": args.matrix},
        "seed": seed_used,
    }, args.output)
    return 0


def _cmd_incoherence(args):
    Ba = read_matrix(args.matrix_a)
    Bb = read_matrix(args.matrix_b)
    seed = _resolve_seed(args.seed, None)
    est = pairwise_incoherence(Ba, Bb, args.sparsity, cap=args.cap,
                               trials=args.trials,
                               rng=np.random.default_rng(seed))
    _emit_json({
        "kind": est.kind, "value": est.value, "trials": est.trials,
        "params": {"sparsity": args.sparsity, "matrix_a": args.matrix_a,
                   "matrix_b": args.matrix_b},
        "seed": seed if est.kind == "monteCarloLowerBound" else None,
    }, args.output)
    return 0


def _cmd_project(args):
    x = parse_block_vector(_load_json(args.input), "input")
    pat = _load_json(args.pattern)
    _check_no_unknown(pat, {"s", "sigma", "block_dims"}, "pattern")
    s = _get(pat, "s", (int,), context="pattern")
    sigma = _int_list(pat, "sigma", "pattern")
    if len(sigma) == 1:
        sigma = sigma * x.num_blocks
    if "block_dims" in pat:
        dims = _int_list(pat, "block_dims", "pattern")
        if tuple(dims) != x.block_dims:
            raise ConfigError(
                f"pattern block_dims {dims} do not match input {list(x.block_dims)}"
            )
    try:
        pattern = SparsityPattern(s, tuple(sigma), x.block_dims)
    except ValueError as exc:
        raise ConfigError(f"bad pattern: {exc}") from exc
    projected, support = project_hi_sparse(x, pattern)
    _emit_json({
        "input": _vector_json(x),
        "pattern": {"s": s, "sigma": sigma, "block_dims": list(x.block_dims)},
        "projected": _vector_json(projected),
        "support": [list(e) for e in support],
    }, args.output)
    return 0


# ---------------------------------------------------------------- parser


def build_parser():
    p = argparse.ArgumentParser(
        prog="hisparse",
        description="Hierarchically sparse recovery, analysis and experiments.",
    )
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("recover", help="run hihtp on a described operator")
    r.add_argument("--config", required=True)
    r.add_argument("--output", default=None, help="JSON output path (default stdout)")
    r.add_argument("--seed", type=int, default=None)
    r.set_defaults(func=_cmd_recover)

    e = sub.add_parser("experiment", help="Monte Carlo detection sweep to CSV")
    e.add_argument("--config", required=True)
    e.add_argument("--output", required=True)
    e.add_argument("--jobs", type=int, default=1)
    e.add_argument("--seed", type=int, default=None, help="master seed override")
    e.set_defaults(func=_cmd_experiment)

    ri = sub.add_parser("rip", help="isometry constant of a stored matrix")
    ri.add_argument("--matrix", required=True)
    ri.add_argument("--sparsity", type=int, required=True)
    ri.add_argument("--trials", type=int, default=None,
                    help="Monte Carlo trials (default: exact enumeration)")
    ri.add_argument("--seed", type=int, default=None)
    ri.add_argument("--output", default=None)
    ri.set_defaults(func=_cmd_rip)

    inc = sub.add_parser("incoherence", help="pairwise incoherence of two matrices")
    inc.add_argument("--matrix-a", required=True)
    inc.add_argument("--matrix-b", required=True)
    inc.add_argument("--sparsity", type=int, required=True)
    inc.add_argument("--cap", type=int, default=5_000_000)
    inc.add_argument("--trials", type=int, default=20000)
    inc.add_argument("--seed", type=int, default=None)
    inc.add_argument("--output", default=None)
    inc.set_defaults(func=_cmd_incoherence)

    pr = sub.add_parser("project", help="best hi-sparse approximation of a vector")
    pr.add_argument("--input", required=True)
    pr.add_argument("--pattern", required=True)
    pr.add_argument("--output", default=None)
    pr.set_defaults(func=_cmd_project)
    return p


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except EnumerationCapExceeded as exc:
        return _fail("cap-error", exc)
    except ConfigError as exc:
        return _fail("config-error", exc)
    except SolverDivergence as exc:
        return _fail("solver-error", exc)
    except FileNotFoundError as exc:
        return _fail("io-error", exc)
    except OSError as exc:
        return _fail("io-error", exc)
    except ValueError as exc:
        return _fail("value-error", exc)


def _fail(category, exc):
    msg = str(exc).splitlines()[0] if str(exc) else exc.__class__.__name__
    print(f"{category}: {msg}", file=sys.stderr)
    return 1


if __name__ == "__main__":
    sys.exit(main())
