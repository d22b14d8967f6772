"""Command-line entry point: detect, measure, bound and oracle commands.

Each command reads a JSON model file, runs the corresponding pipeline
stage and prints a run report.  Reports render as a table by default,
with ``--format json`` for lossless machine output and ``--format csv``
for delimited rows.  Exit codes follow a fixed contract: 0 for success
(including a representable detection), 3 when the measure is not a
finite geometric sum, 4 for walks outside the supported regime and 1
for every other error.
"""

from __future__ import annotations

import json
import pathlib
import sys
import time

import click

from . import bounds as _bounds
from . import measure as _measure
from . import oracle as _oracle
from . import perturbation as _perturbation
from .detection import DetectionConfig, UnsupportedRegimeError, detect
from .model import (FIXTURE_NAMES, PerformanceFunctional, fixture_path,
                    load_model, normalize_walk, validate_walk)

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_REPRESENTABLE = 3
EXIT_UNSUPPORTED = 4


def _sig6(value):
    """Six significant digits for human-readable output."""
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _flatten(payload, prefix=""):
    """Depth-first (key, value) pairs for table and csv rendering."""
    items = []
    if isinstance(payload, dict):
        for key, value in payload.items():
            items.extend(_flatten(value, f"{prefix}{key}."))
    elif isinstance(payload, (list, tuple)):
        for idx, value in enumerate(payload):
            items.extend(_flatten(value, f"{prefix}{idx}."))
    else:
        items.append((prefix[:-1], payload))
    return items


def _emit(report: dict, fmt: str):
    if fmt == "json":
        click.echo(json.dumps(report, indent=2, default=str))
        return
    rows = _flatten(report)
    if fmt == "csv":
        for key, value in rows:
            click.echo(f"{key},{_sig6(value)}")
        return
    width = max((len(k) for k, _ in rows), default=0)
    for key, value in rows:
        click.echo(f"{key.ljust(width)}  {_sig6(value)}")


def _load(model_path: str, normalize: bool):
    """Resolve a model path (bundled fixture names are accepted too)."""
    path = pathlib.Path(model_path)
    if not path.exists() and model_path.upper() in FIXTURE_NAMES:
        path = pathlib.Path(str(fixture_path(model_path.upper())))
    if not path.exists():
        raise click.ClickException(f"model file not found: {model_path}")
    try:
        walk, functional = load_model(path)
    except (OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        raise click.ClickException(f"cannot read model: {exc}")
    if normalize:
        walk = normalize_walk(walk)
    report = validate_walk(walk)
    if not report.ok:
        raise click.ClickException(f"invalid walk: {report.violations}")
    return walk, functional, path


def _pick_functional(perf: str | None,
                     from_file: PerformanceFunctional | None):
    if perf:
        return PerformanceFunctional.preset(perf)
    return from_file


def _require_functional(perf, from_file) -> PerformanceFunctional:
    functional = _pick_functional(perf, from_file)
    if functional is None:
        raise click.ClickException(
            "no reward function: pass --perf f1|f2 or add a 'functional' "
            "block to the model file")
    return functional


_FORMAT = click.option("--format", "fmt",
                       type=click.Choice(["json", "csv", "table"]),
                       default="table", show_default=True,
                       help="Output rendering.")
_NORMALIZE = click.option("--normalize", is_flag=True,
                          help="Rescale the input rows to sum to one.")
_PERF = click.option("--perf", type=click.Choice(["f1", "f2"]), default=None,
                     help="Reward preset: f1 is the mean first coordinate, "
                          "f2 the empty-system probability.")


@click.group()
@click.version_option(package_name="qwgeom")
def main():
    """Finite geometric-sum invariant measures and certified bounds for
    quarter-plane random walks."""


@main.command("detect")
@click.argument("model_path")
@click.option("--tol", type=float, default=1e-3, show_default=True,
              help="Membership tolerance for chain endpoints.")
@click.option("--max-steps", type=int, default=10000, show_default=True,
              help="Cap on coupled-chain length.")
@click.option("--strict", is_flag=True,
              help="Treat ambiguous endpoint hits as errors.")
@click.option("--debug-curves", is_flag=True,
              help="Render the curve diagram to <model>_curves.png and "
                   "include curve diagnostics.")
@_NORMALIZE
@_FORMAT
def cmd_detect(model_path, tol, max_steps, strict, debug_curves, normalize,
               fmt):
    """Decide whether the invariant measure is a finite geometric sum."""
    walk, _, path = _load(model_path, normalize)
    started = time.perf_counter()
    cfg = DetectionConfig(membership_tol=tol, step_cap=max_steps)
    try:
        outcome = detect(walk, cfg)
    except UnsupportedRegimeError as exc:
        click.echo(f"unsupported regime: {exc}", err=True)
        sys.exit(EXIT_UNSUPPORTED)
    if strict and outcome.ambiguous_hits:
        raise click.ClickException(
            f"{len(outcome.ambiguous_hits)} ambiguous endpoint hits at "
            f"tolerance {tol}; rerun with a different --tol")
    payload = {
        "representable": outcome.representable,
        "n_terms": len(outcome.terms),
        "terms": [{"rho": t.rho, "sigma": t.sigma} for t in outcome.terms],
        "parity": outcome.parity,
        "endpoints": outcome.endpoints,
        "termination_bound": outcome.termination_bound,
        "h_set": [list(p) for p in outcome.h_set],
        "v_set": [list(p) for p in outcome.v_set],
    }
    warnings_ = []
    if outcome.ambiguous_hits:
        warnings_.append(
            f"{len(outcome.ambiguous_hits)} chain(s) ended ambiguously "
            "close to both axis sets")
    if debug_curves:
        from . import plots
        figure = path.with_suffix("").name + "_curves.png"
        plots.render_curves(walk, figure, outcome.terms,
                            title=f"balance curves: {path.name}")
        payload["curve_figure"] = figure
    report = {
        "command": "detect", "input": str(path), "outcome": payload,
        "timings": {"seconds": time.perf_counter() - started},
        "warnings": warnings_,
    }
    _emit(report, fmt)
    sys.exit(EXIT_OK if outcome.representable else EXIT_NOT_REPRESENTABLE)


@main.command("measure")
@click.argument("model_path")
@_PERF
@click.option("--tol", type=float, default=1e-3, show_default=True,
              help="Detection membership tolerance.")
@_NORMALIZE
@_FORMAT
def cmd_measure(model_path, perf, tol, normalize, fmt):
    """Solve for the mixture weights and closed-form performance values."""
    walk, file_functional, path = _load(model_path, normalize)
    started = time.perf_counter()
    try:
        outcome = detect(walk, DetectionConfig(membership_tol=tol))
    except UnsupportedRegimeError as exc:
        click.echo(f"unsupported regime: {exc}", err=True)
        sys.exit(EXIT_UNSUPPORTED)
    if not outcome.representable:
        click.echo("measure is not a finite sum of geometric terms; "
                   "use 'qwgeom bound' for certified bounds", err=True)
        sys.exit(EXIT_NOT_REPRESENTABLE)
    mixture = _measure.solve_coefficients(walk, outcome.terms)
    payload = {
        "n_terms": len(mixture.terms),
        "parity": outcome.parity,
        "terms": mixture.to_json(),
        "total_mass": mixture.total_mass,
    }
    functional = _pick_functional(perf, file_functional)
    if functional is not None:
        payload["performance"] = _measure.exact_performance(mixture,
                                                            functional)
    report = {
        "command": "measure", "input": str(path), "outcome": payload,
        "timings": {"seconds": time.perf_counter() - started},
        "warnings": list(mixture.warnings_),
    }
    _emit(report, fmt)
    sys.exit(EXIT_OK)


def _resolve_candidates(walk, candidate: str, count: int):
    """Candidate curve points for single-bound mode: 'auto' scans the
    sampled points, an integer picks one, a path reads [rho, sigma]."""
    if candidate == "auto":
        return _perturbation.candidate_terms(walk, count), True
    try:
        index = int(candidate)
    except ValueError:
        file = pathlib.Path(candidate)
        if not file.exists():
            raise click.ClickException(
                f"--candidate must be 'auto', an index or a JSON file; "
                f"got {candidate!r}")
        point = json.loads(file.read_text())
        return [(float(point[0]), float(point[1]))], False
    points = _perturbation.candidate_terms(walk, count)
    if not 0 <= index < len(points):
        raise click.ClickException(
            f"candidate index {index} out of range 0..{len(points) - 1}")
    return [points[index]], False


@main.command("bound")
@click.argument("model_path")
@_PERF
@click.option("--perturb", type=click.Choice(["product", "mixture"]),
              default="product", show_default=True,
              help="Shape of the perturbation target.")
@click.option("--gamma-size", type=int, default=3, show_default=True,
              help="Number of terms in a mixture target (odd).")
@click.option("--candidate", default="auto", show_default=True,
              help="Target point on Q: 'auto', an index, or a JSON file "
                   "with [rho, sigma].")
@click.option("--sweep", "sweep_k", type=int, default=None,
              help="Run a K-candidate sweep and emit per-candidate CSV "
                   "plus figure files.")
@click.option("--dump-lp", "dump_lp_path", type=click.Path(), default=None,
              help="Write the generated constraint rows as plain text.")
@click.option("--strict", is_flag=True,
              help="Fail on perturbation-target warnings.")
@_NORMALIZE
@_FORMAT
def cmd_bound(model_path, perf, perturb, gamma_size, candidate, sweep_k,
              dump_lp_path, strict, normalize, fmt):
    """Certified upper and lower bounds through a perturbed walk."""
    walk, file_functional, path = _load(model_path, normalize)
    functional = _require_functional(perf, file_functional)
    started = time.perf_counter()
    warnings_ = []
    try:
        if detect(walk).representable:
            message = ("walk is representable: 'qwgeom measure' gives the "
                       "exact value; bounds are certified but conservative")
            warnings_.append(message)
            click.echo(f"warning: {message}", err=True)
    except Exception:  # noqa: BLE001 - advisory only
        pass

    mixture_size = gamma_size if perturb == "mixture" else 1
    if mixture_size != 1 and mixture_size % 2 == 0:
        raise click.ClickException("--gamma-size must be odd")

    if sweep_k is not None:
        points = _perturbation.candidate_terms(walk, sweep_k)
        rows, _ = _bounds.sweep_bounds(walk, functional, points,
                                       mixture_size=mixture_size)
        csv_text = _bounds.sweep_csv(rows)
        stem = path.with_suffix("").name
        csv_file = f"{stem}_sweep.csv"
        pathlib.Path(csv_file).write_text(csv_text)
        from . import plots
        figure = plots.render_sweep(rows, f"{stem}_sweep.png",
                                    title=f"sweep bounds: {path.name}")
        summary = _bounds.sweep_summary(rows)
        if fmt == "csv":
            click.echo(csv_text, nl=False)
        else:
            payload = {
                "sweep": [
                    {"candidate_index": r.index, "rho": r.rho,
                     "sigma": r.sigma, "C": r.C, "F_low": r.F_low,
                     "F_up": r.F_up, "error": r.error}
                    for r in rows],
                "summary": summary,
                "csv_file": csv_file,
                "figure": figure,
            }
            report = {
                "command": "bound", "input": str(path), "outcome": payload,
                "timings": {"seconds": time.perf_counter() - started},
                "warnings": warnings_,
            }
            _emit(report, fmt)
        sys.exit(EXIT_OK)

    points, scan = _resolve_candidates(walk, candidate, 12)
    best = None
    errors = []
    for point in points:
        try:
            if mixture_size == 1:
                pert = _perturbation.build_product_perturbation(walk, point)
            else:
                chain = _perturbation.chain_from_candidate(walk, point,
                                                           mixture_size)
                if chain is None:
                    raise _bounds.BoundError(
                        "no coupled chain of the requested size from here")
                pert = _perturbation.build_mixture_perturbation(
                    walk, chain, strict=strict)
            result = _bounds.bound_performance(pert, functional)
        except (_bounds.BoundError, _perturbation.PerturbationError,
                ValueError) as exc:
            errors.append(f"({point[0]:.4f}, {point[1]:.4f}): {exc}")
            continue
        gap = result.F_up - result.F_low
        if best is None or gap < best[0]:
            best = (gap, point, result)
    if best is None:
        detail = "; ".join(errors[:3])
        raise click.ClickException(
            f"no candidate produced a bound ({detail})")
    _, point, result = best
    pert = result.perturbation
    payload = {
        "F_low": result.F_low,
        "F_up": result.F_up,
        "gap": result.F_up - result.F_low,
        "target": {"kind": perturb, "anchor": list(point),
                   "terms": pert.target_measure.to_json()},
        "perturbation": {
            "C": pert.C,
            "rates": {"H1": pert.rates.H1, "Hm1": pert.rates.Hm1,
                      "V1": pert.rates.V1, "Vm1": pert.rates.Vm1},
            "q_horizontal": {str(k): v
                             for k, v in pert.q_horizontal.items()},
            "q_vertical": {str(k): v for k, v in pert.q_vertical.items()},
        },
        "optimizer": {"iterations_up": result.iterations_up,
                      "iterations_low": result.iterations_low,
                      "constraints": len(result.constraints),
                      "candidates_scanned": len(points) if scan else 1},
    }
    if dump_lp_path:
        pathlib.Path(dump_lp_path).write_text(
            _bounds.dump_lp(result.constraints))
        payload["lp_dump"] = dump_lp_path
    report = {
        "command": "bound", "input": str(path), "outcome": payload,
        "timings": {"seconds": time.perf_counter() - started},
        "warnings": warnings_ + errors,
    }
    _emit(report, fmt)
    sys.exit(EXIT_OK)


@main.command("oracle")
@click.argument("model_path")
@click.option("--size", "n", type=int, default=200, show_default=True,
              help="Truncation size N.")
@_PERF
@click.option("--dump-grid", "dump_grid_path", type=click.Path(),
              default=None,
              help="Write the stationary grid as CSV rows i,j,value.")
@_NORMALIZE
@_FORMAT
def cmd_oracle(model_path, n, perf, dump_grid_path, normalize, fmt):
    """Brute-force reference values from a truncated lattice."""
    walk, file_functional, path = _load(model_path, normalize)
    functional = _require_functional(perf, file_functional)
    if n < 8:
        raise click.ClickException("--size must be at least 8")
    started = time.perf_counter()
    value = _oracle.oracle_performance(walk, functional, N=n)
    payload = {
        "performance": value.value,
        "raw": value.raw,
        "half_grid_indicator": (None if value.raw_half is None
                                else abs(value.raw - value.raw_half)),
        "N": value.N,
        "tail_mass": value.tail_mass,
    }
    warnings_ = []
    if value.tail_mass > _oracle.TAIL_WARN:
        warnings_.append(
            f"outer layers carry mass {value.tail_mass:.3e}; "
            "increase --size")
    if dump_grid_path:
        grid = _oracle.stationary_truncated(walk, n)
        lines = ["i,j,value"]
        for i in range(n):
            for j in range(n):
                lines.append(f"{i},{j},{grid[i, j]!r}")
        pathlib.Path(dump_grid_path).write_text("\n".join(lines) + "\n")
        payload["grid_dump"] = dump_grid_path
    report = {
        "command": "oracle", "input": str(path), "outcome": payload,
        "timings": {"seconds": time.perf_counter() - started},
        "warnings": warnings_,
    }
    _emit(report, fmt)
    sys.exit(EXIT_OK)


if __name__ == "__main__":
    main()
