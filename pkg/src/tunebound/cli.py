"""Command-line front end.

One JSON config per run, no flags beyond ``--config`` and ``--out``::

    tunebound --config run.json --out results/

The config's ``command`` field selects bounds / solve / tune / gapcurve /
shatter; the rest of the document is command-specific and validated against
a JSON schema before anything runs (violations exit with code 2 and
field-level diagnostics on stderr; runtime failures exit 1).  Every output
embeds the resolved config (defaults filled) and the library version, and
serialization is deterministic -- sorted keys, 17 significant digits, LF
line endings, no timestamps -- so identical configs produce byte-identical
artifacts.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import __version__
from .bounds import (
    FolComplexity,
    pdim_elastic_net,
    pdim_fol,
    pdim_fused_lasso,
    pdim_goldberg_jerrum_legacy,
    pdim_group_lasso,
    pdim_solution_path,
    pdim_training,
    pdim_validation,
    qe_complexity,
    sample_complexity,
)
from .elastic_net import ElasticNetProblem
from .fused_lasso import FusedDualProblem
from .group_lasso import group_lasso_kkt_residual, group_lasso_solve
from .problems import ProblemInstance
from .shattering import loss_matrix, max_shattered
from .tuning import (
    DISTRIBUTION_KINDS,
    SOLVER_KINDS,
    AlphaGrid,
    DistributionSpec,
    erm_tune,
    gap_curve,
    gen_instances,
)

_INT1 = {"type": "integer", "minimum": 1}
_INT0 = {"type": "integer", "minimum": 0}
_NUM = {"type": "number"}
_POS = {"type": "number", "exclusiveMinimum": 0}
_NONNEG = {"type": "number", "minimum": 0}

_GRID_SCHEMA = {
    "type": "object",
    "required": ["lo", "hi", "points", "p"],
    "properties": {
        "lo": _NUM,
        "hi": _NUM,
        "points": _INT1,
        "spacing": {"enum": ["linear", "logarithmic"]},
        "p": _INT1,
    },
    "additionalProperties": False,
}

_DIST_SCHEMA = {
    "type": "object",
    "required": ["kind", "m", "m_val", "d", "noise_std"],
    "properties": {
        "kind": {"enum": list(DISTRIBUTION_KINDS)},
        "m": _INT1,
        "m_val": _INT1,
        "d": _INT1,
        "noise_std": _NONNEG,
        "n_change_points": _INT1,
        "n_active_blocks": _INT1,
        "block_dims": {"type": "array", "items": _INT1, "minItems": 1},
    },
    "additionalProperties": False,
}

_TOL_SCHEMA = {
    "type": "object",
    "properties": {
        "kkt_tol": _POS,
        "step_tol": _POS,
        "zero_tol": _POS,
        "active_tol": _POS,
        "max_iters": _INT1,
    },
    "additionalProperties": False,
}

_KIND = {"enum": list(SOLVER_KINDS)}

_COMMAND_SCHEMAS = {
    "bounds": {
        "type": "object",
        "required": ["command", "formula"],
        "properties": {
            "command": {"const": "bounds"},
            "formula": {
                "enum": [
                    "fol",
                    "qe",
                    "gj_legacy",
                    "training",
                    "validation",
                    "solution_path",
                    "group_lasso",
                    "fused_lasso",
                    "elastic_net",
                    "sample_complexity",
                ]
            },
            "c": _POS,
            "n_predicates": _INT1,
            "max_degree": _INT1,
            "p": _INT1,
            "dims": {"type": "array", "items": _INT1},
            "data_dim": _INT1,
            "d": _INT1,
            "f_boundaries": _INT1,
            "f_pieces": _INT1,
            "f_degree": _INT1,
            "g_boundaries": _INT1,
            "g_pieces": _INT1,
            "g_degree": _INT1,
            "path_boundaries": _INT0,
            "path_pieces": _INT1,
            "path_degree": _INT1,
            "obj_boundaries": _INT0,
            "obj_pieces": _INT1,
            "obj_degree": _INT1,
            "pdim": _NONNEG,
            "loss_bound": _POS,
            "epsilon": _POS,
            "delta": {"type": "number", "exclusiveMinimum": 0, "exclusiveMaximum": 1},
            "scale": _POS,
        },
        "additionalProperties": False,
    },
    "solve": {
        "type": "object",
        "required": ["command", "kind", "instance", "alpha"],
        "properties": {
            "command": {"const": "solve"},
            "kind": _KIND,
            "instance": {"type": "string"},
            "alpha": {"type": "array", "items": _POS, "minItems": 1},
            "block_dims": {"type": "array", "items": _INT1, "minItems": 1},
            "tolerances": _TOL_SCHEMA,
        },
        "additionalProperties": False,
    },
    "tune": {
        "type": "object",
        "required": ["command", "kind", "grid"],
        "properties": {
            "command": {"const": "tune"},
            "kind": _KIND,
            "grid": _GRID_SCHEMA,
            "instances": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "dist": _DIST_SCHEMA,
            "n_instances": _INT1,
            "seed": _INT0,
            "block_dims": {"type": "array", "items": _INT1, "minItems": 1},
            "tolerances": _TOL_SCHEMA,
        },
        "additionalProperties": False,
    },
    "gapcurve": {
        "type": "object",
        "required": ["command", "kind", "dist", "seed", "grid", "train_sizes", "trials", "n_mc"],
        "properties": {
            "command": {"const": "gapcurve"},
            "kind": _KIND,
            "dist": _DIST_SCHEMA,
            "seed": _INT0,
            "grid": _GRID_SCHEMA,
            "train_sizes": {"type": "array", "items": _INT1},
            "trials": _INT1,
            "n_mc": {"type": "integer", "minimum": 100},
            "workers": _INT1,
            "clip_loss": _POS,
            "tolerances": _TOL_SCHEMA,
        },
        "additionalProperties": False,
    },
    "shatter": {
        "type": "object",
        "required": ["command", "kind", "grid"],
        "properties": {
            "command": {"const": "shatter"},
            "kind": _KIND,
            "grid": _GRID_SCHEMA,
            "max_n": {"type": "integer", "minimum": 0},
            "instances": {"type": "array", "items": {"type": "string"}, "minItems": 1},
            "dist": _DIST_SCHEMA,
            "n_instances": _INT1,
            "seed": _INT0,
            "block_dims": {"type": "array", "items": _INT1, "minItems": 1},
            "tolerances": _TOL_SCHEMA,
        },
        "additionalProperties": False,
    },
}

_BOUNDS_REQUIRED = {
    "fol": ("n_predicates", "max_degree", "p", "dims"),
    "qe": ("n_predicates", "max_degree", "p", "dims"),
    "gj_legacy": ("n_predicates", "max_degree", "p", "dims", "data_dim"),
    "training": ("p", "d", "f_boundaries", "f_pieces", "f_degree"),
    "validation": (
        "p",
        "d",
        "f_boundaries",
        "f_pieces",
        "f_degree",
        "g_boundaries",
        "g_pieces",
        "g_degree",
    ),
    "solution_path": (
        "p",
        "path_boundaries",
        "path_pieces",
        "path_degree",
        "obj_boundaries",
        "obj_pieces",
        "obj_degree",
    ),
    "group_lasso": ("p", "d"),
    "fused_lasso": ("d",),
    "elastic_net": ("d",),
    "sample_complexity": ("pdim", "loss_bound", "epsilon", "delta"),
}


def validate_config(config) -> list[dict]:
    """Schema diagnostics for a config document; empty list means valid."""
    if not isinstance(config, dict):
        return [{"path": "$", "message": "config must be a JSON object"}]
    command = config.get("command")
    if command not in _COMMAND_SCHEMAS:
        return [
            {
                "path": "$.command",
                "message": f"unknown command {command!r}; expected one of "
                f"{sorted(_COMMAND_SCHEMAS)}",
            }
        ]
    validator = jsonschema.Draft202012Validator(_COMMAND_SCHEMAS[command])
    errors = [
        {"path": "$" + "".join(f"[{p!r}]" for p in e.absolute_path), "message": e.message}
        for e in sorted(validator.iter_errors(config), key=lambda e: list(e.absolute_path))
    ]
    if errors:
        return errors
    # cross-field requirements that plain schemas express poorly
    if command == "bounds":
        missing = [
            k for k in _BOUNDS_REQUIRED[config["formula"]] if k not in config
        ]
        if missing:
            errors.append(
                {
                    "path": "$",
                    "message": f"formula {config['formula']!r} requires fields {missing}",
                }
            )
    if command in ("tune", "shatter"):
        if "instances" not in config:
            for key in ("dist", "n_instances", "seed"):
                if key not in config:
                    errors.append(
                        {
                            "path": "$",
                            "message": f"need either 'instances' or "
                            f"('dist', 'n_instances', 'seed'); missing {key!r}",
                        }
                    )
    if command in ("tune", "gapcurve", "shatter") and "dist" in config:
        dist = config["dist"]
        if dist["kind"] == "group-sparse" and "block_dims" not in dist:
            errors.append(
                {"path": "$['dist']", "message": "group-sparse requires block_dims"}
            )
    return errors


def resolve_defaults(config: dict) -> dict:
    resolved = dict(config)
    if config["command"] == "bounds":
        resolved.setdefault("c", 1.0)
        if config.get("formula") == "sample_complexity":
            resolved.setdefault("scale", 1.0)
    if config["command"] in ("tune", "gapcurve", "shatter"):
        resolved.setdefault("tolerances", {})
    if config["command"] == "solve":
        resolved.setdefault("tolerances", {})
    if config["command"] == "gapcurve":
        resolved.setdefault("workers", 1)
    if config["command"] == "shatter":
        resolved.setdefault("max_n", 12)
    if "grid" in resolved:
        grid = dict(resolved["grid"])
        grid.setdefault("spacing", "linear")
        resolved["grid"] = grid
    return resolved


# ----------------------------------------------------------------------
# command implementations
# ----------------------------------------------------------------------


def _fol_from_config(config) -> FolComplexity:
    return FolComplexity(
        n_predicates=config["n_predicates"],
        max_degree=config["max_degree"],
        free_dim=config["p"],
        block_dims=tuple(config["dims"]),
    )


def _cmd_bounds(config) -> dict:
    formula = config["formula"]
    c = config["c"]
    if formula == "qe":
        log2_count, log2_degree = qe_complexity(_fol_from_config(config), c)
        result = {
            "log2_n_predicates": log2_count,
            "log2_max_degree": log2_degree,
        }
    elif formula == "sample_complexity":
        n = sample_complexity(
            config["pdim"],
            config["loss_bound"],
            config["epsilon"],
            config["delta"],
            config["scale"],
        )
        result = {"n_samples": n}
    else:
        if formula == "fol":
            report = pdim_fol(_fol_from_config(config), c)
        elif formula == "gj_legacy":
            report = pdim_goldberg_jerrum_legacy(
                _fol_from_config(config), config["data_dim"], c
            )
        elif formula == "training":
            report = pdim_training(
                config["p"],
                config["d"],
                config["f_boundaries"],
                config["f_pieces"],
                config["f_degree"],
                c,
            )
        elif formula == "validation":
            report = pdim_validation(
                config["p"],
                config["d"],
                config["f_boundaries"],
                config["f_pieces"],
                config["f_degree"],
                config["g_boundaries"],
                config["g_pieces"],
                config["g_degree"],
                c,
            )
        elif formula == "solution_path":
            report = pdim_solution_path(
                config["p"],
                config["path_boundaries"],
                config["path_pieces"],
                config["path_degree"],
                config["obj_boundaries"],
                config["obj_pieces"],
                config["obj_degree"],
                c,
            )
        elif formula == "group_lasso":
            report = pdim_group_lasso(config["p"], config["d"], c)
        elif formula == "fused_lasso":
            report = pdim_fused_lasso(config["d"], c)
        else:
            report = pdim_elastic_net(config["d"], c)
        result = report.to_json()
    return {"bounds.json": result}


def _solver_options(kind: str, tolerances: dict) -> dict:
    allowed = {
        "elastic": ("kkt_tol", "step_tol", "zero_tol", "max_iters"),
        "fused": ("active_tol", "max_iters"),
        "group": ("kkt_tol", "max_iters"),
    }[kind]
    return {k: v for k, v in tolerances.items() if k in allowed}


def _cmd_solve(config) -> dict:
    x = ProblemInstance.load(config["instance"])
    kind = config["kind"]
    alpha = np.asarray(config["alpha"], dtype=float)
    opts = _solver_options(kind, config["tolerances"])
    if kind == "elastic":
        if alpha.shape != (2,):
            raise ValueError("elastic solve needs alpha = [a1, a2]")
        solution = ElasticNetProblem(x).solve(alpha[0], alpha[1], **opts)
        result = {
            "theta": solution.theta.tolist(),
            "sign_pattern": list(solution.sign_pattern),
            "kkt_residual": solution.kkt_residual,
        }
    elif kind == "fused":
        problem = FusedDualProblem(x)
        solution = problem.solve(alpha, **opts)
        theta = problem.recover(solution.u)
        result = {
            "theta": theta.tolist(),
            "u": solution.u.tolist(),
            "active_set": list(solution.active_set),
            "duality_gap": problem.duality_gap(solution.u, alpha),
        }
    else:
        block_dims = config.get("block_dims")
        if block_dims is None:
            raise ValueError("group solve requires block_dims")
        theta = group_lasso_solve(x, alpha, block_dims, **opts)
        result = {
            "theta": theta.tolist(),
            "kkt_residual": group_lasso_kkt_residual(x, theta, alpha, block_dims),
        }
    return {"solve.json": result}


def _grid_from_config(config) -> AlphaGrid:
    g = config["grid"]
    return AlphaGrid(
        lo=g["lo"], hi=g["hi"], points=g["points"], spacing=g["spacing"], p=g["p"]
    )


def _spec_from_config(config) -> DistributionSpec:
    dist = dict(config["dist"])
    if "block_dims" in dist:
        dist["block_dims"] = tuple(dist["block_dims"])
    return DistributionSpec(seed=config["seed"], **dist)


def _instances_from_config(config) -> tuple[list[ProblemInstance], tuple | None]:
    if "instances" in config:
        loaded = [ProblemInstance.load(path) for path in config["instances"]]
        dims = config.get("block_dims")
        return loaded, tuple(dims) if dims else None
    spec = _spec_from_config(config)
    return gen_instances(spec, config["n_instances"]), spec.block_dims


def _cmd_tune(config) -> dict:
    instances, block_dims = _instances_from_config(config)
    grid = _grid_from_config(config)
    alpha_hat, loss = erm_tune(
        config["kind"],
        instances,
        grid,
        block_dims=block_dims,
        options=_solver_options(config["kind"], config["tolerances"]),
    )
    return {
        "tune.json": {
            "alpha_hat": alpha_hat.tolist(),
            "empirical_loss": loss,
            "n_instances": len(instances),
            "grid_size": len(grid),
        }
    }


def _cmd_gapcurve(config) -> dict:
    spec = _spec_from_config(config)
    grid = _grid_from_config(config)
    result = gap_curve(
        config["kind"],
        spec,
        grid,
        config["train_sizes"],
        config["trials"],
        config["n_mc"],
        block_dims=spec.block_dims,
        clip_loss=config.get("clip_loss"),
        options=_solver_options(config["kind"], config["tolerances"]),
        workers=config["workers"],
    )
    columns = ["kind", "n_train", "trial", "gap"] + [
        f"alpha_hat_{i}" for i in range(grid.p)
    ]
    rows = [
        [r["kind"], r["n_train"], r["trial"], r["gap"], *r["alpha_hat"]]
        for r in result.records
    ]
    return {"gapcurve.json": result.to_json(), "gapcurve.csv": (columns, rows)}


def _cmd_shatter(config) -> dict:
    instances, block_dims = _instances_from_config(config)
    grid = _grid_from_config(config)
    matrix = loss_matrix(
        config["kind"],
        instances,
        grid,
        block_dims=block_dims,
        options=_solver_options(config["kind"], config["tolerances"]),
    )
    size, witness = max_shattered(matrix, config["max_n"])
    payload = None
    if witness is not None:
        payload = {
            "rows": list(witness.rows),
            "thresholds": list(witness.thresholds),
            "patterns": [
                {
                    "pattern": list(pattern),
                    "column": column,
                    "alpha": [float(v) for v in grid.point(column)],
                }
                for pattern, column in sorted(witness.pattern_columns.items())
            ],
        }
    return {
        "shatter.json": {
            "size": size,
            "witness": payload,
            "n_instances": len(instances),
            "grid_size": len(grid),
        }
    }


_COMMANDS = {
    "bounds": _cmd_bounds,
    "solve": _cmd_solve,
    "tune": _cmd_tune,
    "gapcurve": _cmd_gapcurve,
    "shatter": _cmd_shatter,
}


# ----------------------------------------------------------------------
# emission
# ----------------------------------------------------------------------


def _format_real(value) -> str:
    return format(float(value), ".17g")


def _csv_cell(value) -> str:
    if isinstance(value, float):
        return _format_real(value)
    return str(value)


def emit_report(outputs: dict, out_dir: Path, resolved_config: dict) -> list[Path]:
    """Write command outputs deterministically; returns the written paths."""
    written = []
    for name, payload in sorted(outputs.items()):
        path = out_dir / name
        if name.endswith(".csv"):
            columns, rows = payload
            lines = ["# " + ",".join(columns)]
            lines += [",".join(_csv_cell(v) for v in row) for row in rows]
            with open(path, "w", newline="\n") as fh:
                fh.write("\n".join(lines) + "\n")
        else:
            document = {
                "version": __version__,
                "config": resolved_config,
                "result": payload,
            }
            with open(path, "w", newline="\n") as fh:
                fh.write(json.dumps(document, sort_keys=True, indent=2) + "\n")
        written.append(path)
    return written


def run(config: dict, out_dir) -> list[Path]:
    """Validated-config entry point used by both main() and tests."""
    resolved = resolve_defaults(config)
    outputs = _COMMANDS[resolved["command"]](resolved)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    return emit_report(outputs, out_dir, resolved)


def _print_error(report: dict) -> None:
    sys.stderr.write(json.dumps(report, sort_keys=True, indent=2) + "\n")


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="tunebound",
        description="Run bound calculators, solvers and tuning experiments "
        "from a JSON config.",
    )
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    try:
        config = json.loads(Path(args.config).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        _print_error({"error": "config", "details": [{"path": "$", "message": str(exc)}]})
        return 2
    diagnostics = validate_config(config)
    if diagnostics:
        _print_error({"error": "config", "details": diagnostics})
        return 2
    try:
        run(config, args.out)
    except Exception as exc:  # runtime failure, distinct from config failure
        _print_error(
            {"error": "runtime", "type": type(exc).__name__, "message": str(exc)}
        )
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
