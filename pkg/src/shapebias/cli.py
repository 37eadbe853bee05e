"""Command-line experiment runner.

Subcommands reproduce the desk-scale experiments as CSV files (schema
comments + named columns), optionally rendering a matplotlib figure next
to the delimited output (``--plot`` / ``--fig``).  Runs are fully seeded:
stochastic subcommands refuse to run without ``--seed``.

Exit codes: 0 success, 2 unusable configuration, 3 numeric failure (the
failing stage is named on stderr).
"""

from __future__ import annotations

import argparse
import csv
import datetime
import math
import sys
from pathlib import Path

import numpy as np

from .bootstrap import estimate_mean_curvature_empirical
from .clustering import kmeans_shapes
from .densities import (
    ExampleSpace,
    asymptotic_estimate,
    bias_curve,
    induced_density_plane,
    induced_density_sphere,
    mean_curvature_analytic,
    singularity_bias,
)
from .errors import ShapeBiasError
from .estimation import estimate_template_coords
from .generative import (
    plane_template,
    shape_coordinate,
    sphere_template,
    triangle_template,
)
from .groups import orbit_distance_coords, register_coords
from .scenarios import (
    correction_pipeline,
    generate_dataset,
    uncorrected_orbit_error,
)
from .seeding import substream
from .spaces import Euclidean, ManifoldPoint, Sphere

SCHEMA_VERSION = 1

SCENARIOS = ("plane", "sphere", "triangles", "kmeans", "protein", "singularity")


class ConfigError(Exception):
    """Unusable command-line / config-file input (exit code 2)."""


# ---------------------------------------------------------------------------
# parsing helpers
# ---------------------------------------------------------------------------


def _parse_sigma_grid(text: str) -> list[float]:
    try:
        start, stop, count = text.split(":")
        grid = np.linspace(float(start), float(stop), int(count))
    except ValueError as exc:
        raise ConfigError(f"--sigma-grid expects start:stop:count, got {text!r}") from exc
    if len(grid) < 1 or np.any(grid <= 0) or np.any(np.diff(grid) <= 0):
        raise ConfigError("--sigma-grid must be positive and strictly increasing")
    return [float(s) for s in grid]


def _sigma_list(args, required: bool = True) -> list[float]:
    if getattr(args, "sigma_grid", None):
        return _parse_sigma_grid(args.sigma_grid)
    if getattr(args, "sigma", None) is not None:
        if args.sigma <= 0:
            raise ConfigError("--sigma must be positive")
        return [args.sigma]
    if required:
        raise ConfigError("provide --sigma or --sigma-grid")
    return []


def _parse_triangle_vertices(text: str) -> np.ndarray:
    try:
        verts = np.array(
            [[float(v) for v in vertex.split(",")] for vertex in text.split(";")]
        )
    except ValueError as exc:
        raise ConfigError(f"bad triangle template {text!r}") from exc
    if verts.shape[0] != 3 or verts.shape[1] not in (2, 3):
        raise ConfigError("triangle template needs 3 vertices of 2 or 3 coordinates")
    return verts


def _template_point(args) -> ManifoldPoint:
    scenario = args.scenario
    if scenario == "plane":
        r = _template_scalar(args, "radius")
        if r <= 0:
            raise ConfigError("plane template radius must be positive")
        return plane_template(r)
    if scenario == "sphere":
        theta = _template_scalar(args, "colatitude")
        if not 0.0 < theta < math.pi:
            raise ConfigError("sphere template colatitude must lie in (0, pi)")
        return sphere_template(theta)
    if scenario == "triangles":
        if args.template is None:
            return triangle_template()
        return triangle_template(_parse_triangle_vertices(args.template))
    raise ConfigError(f"scenario {scenario!r} has no single template point")


def _template_scalar(args, what: str) -> float:
    if args.template is None:
        raise ConfigError(f"--template ({what}) is required")
    try:
        return float(args.template)
    except ValueError as exc:
        raise ConfigError(f"--template must be a number for this scenario") from exc


def _require_seed(args) -> int:
    if args.seed is None:
        raise ConfigError("--seed is required (unseeded runs are refused)")
    if args.seed < 0:
        raise ConfigError("--seed must be a nonnegative integer")
    return args.seed


def _require_n(args) -> int:
    if args.n is None or args.n < 1:
        raise ConfigError("--n must be a positive sample count")
    return args.n


def _fig_path(args):
    if getattr(args, "fig", None):
        return Path(args.fig)
    if getattr(args, "plot", False):
        if not args.out:
            raise ConfigError("--plot needs --out to derive the figure path")
        return Path(args.out).with_suffix(".png")
    return None


# ---------------------------------------------------------------------------
# CSV output
# ---------------------------------------------------------------------------


def _fmt(value) -> str:
    if isinstance(value, float):
        return repr(float(value))
    return str(value)


def _write_csv(args, columns, rows, meta=None, summary_rows=None) -> None:
    if not args.out:
        raise ConfigError("--out is required")
    path = Path(args.out)
    with open(path, "w", newline="") as fh:
        fh.write(f"# schema_version={SCHEMA_VERSION}\n")
        fh.write(f"# command={args.command}\n")
        for key, value in (meta or {}).items():
            fh.write(f"# {key}={value}\n")
        if not args.deterministic:
            fh.write(f"# generated={datetime.datetime.now().isoformat()}\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])
        for row in summary_rows or []:
            writer.writerow([_fmt(v) for v in row])


# ---------------------------------------------------------------------------
# subcommand handlers
# ---------------------------------------------------------------------------


def _cmd_simulate(args, stage) -> None:
    seed = _require_seed(args)
    n = _require_n(args)
    sigma = _sigma_list(args)[0]

    if args.scenario == "singularity":
        if args.dim is None or args.dim < 2:
            raise ConfigError("--dim >= 2 is required for the singularity scenario")
        stage("sampling")
        rng = substream(seed, 0)
        norms = np.linalg.norm(rng.standard_normal((n, args.dim)) * sigma, axis=1)
        rows = [(i, float(v)) for i, v in enumerate(norms)]
        stage("output")
        _write_csv(
            args,
            ("index", "shape_coordinate"),
            rows,
            meta={"sigma": sigma, "dim": args.dim, "seed": seed,
                  "analytic_bias": singularity_bias(args.dim, sigma)},
            summary_rows=[("estimate", float(norms.mean()))],
        )
        fig = _fig_path(args)
        if fig is not None:
            from . import reports

            reports.plot_shape_histogram(norms, float(norms.mean()), fig)
        return

    template = _template_point(args)
    space = template.space
    stage("generation")
    data = generate_dataset(template, sigma, n, seed, poses=args.poses)
    stage("estimation")
    y_hat, _, _, _ = estimate_template_coords(space, data)
    _, registered = register_coords(space, y_hat, data)

    stage("output")
    if args.scenario == "triangles":
        d = space.ambient_dim
        columns = ("index",) + tuple(f"c{i}" for i in range(d))
        rows = [(i, *map(float, row)) for i, row in enumerate(registered)]
        summary = [("estimate", *map(float, y_hat))]
        values = orbit_distance_coords(space, y_hat, data)
        estimate_val = 0.0
        density = None
    else:
        zs = shape_coordinate(space, registered)
        columns = ("index", "shape_coordinate")
        rows = [(i, float(z)) for i, z in enumerate(zs)]
        estimate_val = float(shape_coordinate(space, y_hat[None])[0])
        summary = [("estimate", estimate_val)]
        values = zs
        tmpl_val = float(shape_coordinate(space, template.coords[None])[0])
        if args.scenario == "plane":
            density = lambda g: induced_density_plane(g, tmpl_val, sigma)
        else:
            density = lambda g: induced_density_sphere(g, tmpl_val, sigma)
    _write_csv(
        args,
        columns,
        rows,
        meta={"scenario": args.scenario, "sigma": sigma, "n": n, "seed": seed},
        summary_rows=summary,
    )
    fig = _fig_path(args)
    if fig is not None:
        from . import reports

        reports.plot_shape_histogram(values, estimate_val, fig, density=density)


def _cmd_estimate(args, stage) -> None:
    seed = _require_seed(args)
    n = _require_n(args)
    sigma = _sigma_list(args)[0]
    template = _template_point(args)
    space = template.space
    stage("generation")
    data = generate_dataset(template, sigma, n, seed, poses=args.poses)
    stage("estimation")
    y_hat, _, trace, converged = estimate_template_coords(space, data)
    meta = {
        "scenario": args.scenario,
        "sigma": sigma,
        "n": n,
        "seed": seed,
        "converged": str(bool(converged)).lower(),
        "estimate": " ".join(repr(float(v)) for v in y_hat),
        "orbit_error": uncorrected_orbit_error(template, ManifoldPoint(space, y_hat)),
    }
    stage("output")
    _write_csv(args, ("iteration", "cost"), list(enumerate(map(float, trace))), meta=meta)


def _cmd_bias_curve(args, stage) -> None:
    sigmas = _sigma_list(args)
    stage("quadrature")
    if args.scenario == "singularity":
        if args.dim is None or args.dim < 2:
            raise ConfigError("--dim >= 2 is required for the singularity scenario")
        rows = [(s, singularity_bias(args.dim, s), singularity_bias(args.dim, s)) for s in sigmas]
        meta = {"scenario": args.scenario, "dim": args.dim, "template": 0.0}
    elif args.scenario in ("plane", "sphere"):
        tmpl = _template_scalar(args, "shape coordinate")
        example = ExampleSpace.PLANE if args.scenario == "plane" else ExampleSpace.SPHERE
        curve = bias_curve(example, tmpl, sigmas, kernel=args.kernel)
        rows = [
            (float(s), float(tmpl + b), float(b))
            for s, b in zip(curve.sigmas, curve.biases)
        ]
        meta = {"scenario": args.scenario, "template": tmpl, "kernel": args.kernel}
    else:
        raise ConfigError(f"bias-curve does not support scenario {args.scenario!r}")
    stage("output")
    _write_csv(args, ("sigma", "estimate", "bias"), rows, meta=meta)
    fig = _fig_path(args)
    if fig is not None:
        from . import reports

        reports.plot_bias_curve([r[0] for r in rows], [r[2] for r in rows], fig)


def _cmd_correct(args, stage) -> None:
    seed = _require_seed(args)
    n = _require_n(args)
    sigma = _sigma_list(args)[0]
    if args.method not in ("iterative", "nested"):
        raise ConfigError("--method must be iterative or nested")
    if args.analytic and args.scenario not in ("plane", "sphere"):
        raise ConfigError("--analytic replication needs the plane or sphere scenario")
    if args.n_nested < 1 or args.max_iter < 1:
        raise ConfigError("--n-nested and --max-iter must be positive")
    if args.n_bootstrap is not None and args.n_bootstrap < 1:
        raise ConfigError("--n-bootstrap must be positive")
    if args.eps is not None and args.eps <= 0:
        raise ConfigError("--eps must be positive")
    template = _template_point(args)
    stage("pipeline")
    result, trace = correction_pipeline(
        template,
        sigma,
        n,
        seed,
        correction=args.method,
        n_bootstrap=args.n_bootstrap,
        n_nested=args.n_nested,
        eps=args.eps,
        max_iter=args.max_iter,
        analytic=args.analytic,
    )
    corrected = trace.estimates[-1]
    d = template.space.ambient_dim
    columns = ("iteration", "bias_norm") + tuple(f"e{i}" for i in range(d))
    rows = [
        (k, trace.bias_vectors[k].norm, *map(float, trace.estimates[k + 1].coords))
        for k in range(trace.iterations)
    ]
    meta = {
        "scenario": args.scenario,
        "method": args.method,
        "sigma": sigma,
        "n": n,
        "seed": seed,
        "converged": str(bool(trace.converged)).lower(),
        "uncorrected": " ".join(repr(float(v)) for v in result.template_hat.coords),
        "corrected": " ".join(repr(float(v)) for v in corrected.coords),
        "orbit_error_uncorrected": uncorrected_orbit_error(template, result.template_hat),
        "orbit_error_corrected": uncorrected_orbit_error(template, corrected),
    }
    stage("output")
    _write_csv(args, columns, rows, meta=meta)
    fig = _fig_path(args)
    if fig is not None:
        from . import reports

        reports.plot_correction_trace([tv.norm for tv in trace.bias_vectors], fig)


def _kmeans_accuracy(assignments: np.ndarray, truth: np.ndarray, k: int) -> float:
    # best label permutation; k is small (2 in the experiments)
    from itertools import permutations

    best = 0.0
    for perm in permutations(range(k)):
        mapped = np.array(perm)[assignments]
        best = max(best, float(np.mean(mapped == truth)))
    return best


def _cmd_kmeans(args, stage) -> None:
    seed = _require_seed(args)
    n = _require_n(args)
    sigmas = _sigma_list(args)
    if args.template is None:
        raise ConfigError("--template r1,r2 (two plane radii) is required")
    try:
        radii = [float(v) for v in args.template.split(",")]
    except ValueError as exc:
        raise ConfigError("--template must be comma-separated radii") from exc
    if len(radii) < 2 or any(r <= 0 for r in radii):
        raise ConfigError("kmeans needs at least two positive template radii")
    k = args.k if args.k is not None else len(radii)
    per_cluster = n // len(radii)
    if per_cluster < 1:
        raise ConfigError("--n too small for the number of clusters")

    rows = []
    space = Euclidean(2)
    for si, sigma in enumerate(sigmas):
        stage(f"kmeans sigma={sigma}")
        d_vals, acc_vals = [], []
        for rep in range(args.reps):
            rng_seed = substream(seed, si, rep).integers(2**31 - 1)
            coords = np.vstack(
                [
                    generate_dataset(plane_template(r), sigma, per_cluster, int(rng_seed) + j)
                    for j, r in enumerate(radii)
                ]
            )
            truth = np.repeat(np.arange(len(radii)), per_cluster)
            data = [ManifoldPoint(space, c) for c in coords]
            result = kmeans_shapes(data, k, seed=int(rng_seed))
            d_vals.append(result.criterion_d)
            acc_vals.append(_kmeans_accuracy(result.assignments, truth, k))
        rows.append((float(sigma), float(np.mean(d_vals)), float(np.mean(acc_vals))))
    stage("output")
    _write_csv(
        args,
        ("sigma", "D", "accuracy"),
        rows,
        meta={"template": args.template, "n": n, "seed": seed, "k": k, "reps": args.reps},
    )
    fig = _fig_path(args)
    if fig is not None:
        from . import reports

        reports.plot_kmeans(
            [r[0] for r in rows], [r[1] for r in rows], fig, [r[2] for r in rows]
        )


def _cmd_protein(args, stage) -> None:
    stage("input")
    if args.atoms:
        from .proteins import radius_of_gyration, read_atoms

        cloud = read_atoms(args.atoms)
        rg = radius_of_gyration(cloud)
        n_atoms = cloud.n_atoms
    else:
        if args.rg is None or args.rg <= 0:
            raise ConfigError("provide --atoms FILE or a positive --rg")
        if args.n_atoms is None or args.n_atoms < 2:
            raise ConfigError("--n-atoms >= 2 is required with --rg")
        rg = args.rg
        n_atoms = args.n_atoms
    sigmas = _sigma_list(args)
    from .proteins import false_positive_probability, rg_squared_bias

    stage("formulas")
    rows = []
    for sigma in sigmas:
        fp = false_positive_probability(rg, sigma, args.chi_sq)
        rows.append((float(sigma), float(rg_squared_bias(sigma, n_atoms)), float(fp.probability)))
    stage("output")
    _write_csv(
        args,
        ("sigma", "rg2_bias", "p_false_positive"),
        rows,
        meta={"rg": rg, "n_atoms": n_atoms, "chi_sq": args.chi_sq},
    )
    fig = _fig_path(args)
    if fig is not None:
        from . import reports

        reports.plot_protein(
            [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], fig
        )


def _cmd_curvature(args, stage) -> None:
    seed = _require_seed(args)
    n = _require_n(args)
    sigmas = _sigma_list(args)
    if args.scenario not in ("plane", "sphere"):
        raise ConfigError("curvature supports the plane and sphere scenarios")
    tmpl = _template_scalar(args, "shape coordinate")
    example = ExampleSpace.PLANE if args.scenario == "plane" else ExampleSpace.SPHERE
    template = plane_template(tmpl) if example is ExampleSpace.PLANE else sphere_template(tmpl)
    analytic = mean_curvature_analytic(example, tmpl)
    rows = []
    for si, sigma in enumerate(sigmas):
        stage(f"curvature sigma={sigma}")
        h_vec = estimate_mean_curvature_empirical(template, sigma, n, seed + si)
        empirical = curvature_shape_component(h_vec)
        rows.append((float(sigma), float(analytic), float(empirical)))
    stage("output")
    _write_csv(
        args,
        ("sigma", "curvature_analytic", "curvature_empirical"),
        rows,
        meta={"scenario": args.scenario, "template": tmpl, "n": n, "seed": seed},
    )
    fig = _fig_path(args)
    if fig is not None:
        from . import reports

        reports.plot_curvature(
            [r[0] for r in rows], [r[1] for r in rows], [r[2] for r in rows], fig
        )


def curvature_shape_component(h_vec) -> float:
    """Signed shape-coordinate component of an empirical curvature vector,
    matching the sign convention of :func:`mean_curvature_analytic`."""
    y = h_vec.base
    comp = h_vec.components
    if isinstance(y.space, Euclidean):
        outward = y.coords / np.linalg.norm(y.coords)
    elif isinstance(y.space, Sphere):
        x, yy, z = y.coords
        s = math.hypot(x, yy)
        theta = math.acos(max(-1.0, min(1.0, z)))
        # unit tangent toward increasing colatitude
        outward = np.array([math.cos(theta) * x / s, math.cos(theta) * yy / s, -math.sin(theta)])
    else:
        raise ConfigError("curvature component defined for plane/sphere points only")
    return -float(comp @ outward)


# ---------------------------------------------------------------------------
# argument parser / entry point
# ---------------------------------------------------------------------------


def _add_common(sub, *, scenario_default=None):
    sub.add_argument("--config", help="key=value defaults file; flags override")
    sub.add_argument("--scenario", choices=SCENARIOS, default=scenario_default)
    sub.add_argument("--template", help="scenario template: scalar, 'r1,r2', or 'x,y;x,y;x,y'")
    sub.add_argument("--sigma", type=float)
    sub.add_argument("--sigma-grid", help="START:STOP:COUNT, inclusive linear grid")
    sub.add_argument("--n", type=int)
    sub.add_argument("--seed", type=int)
    sub.add_argument("--out", help="CSV output path")
    sub.add_argument("--deterministic", action="store_true",
                     help="suppress the timestamp comment for byte-identical output")
    sub.add_argument("--plot", action="store_true",
                     help="render a PNG figure next to --out")
    sub.add_argument("--fig", help="explicit figure path (implies --plot)")
    sub.add_argument("--dim", type=int, help="ambient dimension (singularity scenario)")
    sub.add_argument("--poses", choices=("dirac", "uniform"), default="dirac")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="shapebias",
        description="Template-shape estimation experiments: bias curves, corrections, clustering.",
    )
    parser.add_argument("--config", help="key=value defaults file; flags override")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="draw a dataset, estimate, dump shape coordinates")
    _add_common(p)

    p = sub.add_parser("estimate", help="run the template estimation and dump its cost trace")
    _add_common(p)

    p = sub.add_parser("bias-curve", help="asymptotic bias over a noise grid (quadrature)")
    _add_common(p)
    p.add_argument("--kernel", choices=("pushforward", "intrinsic"), default="pushforward")

    p = sub.add_parser("correct", help="estimate and bootstrap-correct the template")
    _add_common(p)
    p.add_argument("--method", choices=("iterative", "nested"), required=True)
    p.add_argument("--n-bootstrap", type=int, help="samples per replication (default: n)")
    p.add_argument("--n-nested", type=int, default=50)
    p.add_argument("--eps", type=float, help="stopping threshold (default: noise-aware)")
    p.add_argument("--max-iter", type=int, default=20)
    p.add_argument("--analytic", action="store_true",
                   help="replace Monte Carlo replications with the analytic estimate")

    p = sub.add_parser("kmeans", help="two-template clustering degradation experiment")
    _add_common(p, scenario_default="kmeans")
    p.add_argument("--k", type=int, help="number of clusters (default: number of templates)")
    p.add_argument("--reps", type=int, default=1)

    p = sub.add_parser("protein", help="radius-of-gyration bias and false-positive bookkeeping")
    _add_common(p, scenario_default="protein")
    p.add_argument("--atoms", help="plain-text atom coordinate file")
    p.add_argument("--rg", type=float, help="radius of gyration in angstroms")
    p.add_argument("--n-atoms", type=int)
    p.add_argument("--chi-sq", type=float, default=8.0)

    p = sub.add_parser("curvature", help="analytic vs empirical orbit mean curvature")
    _add_common(p)
    return parser


_HANDLERS = {
    "simulate": _cmd_simulate,
    "estimate": _cmd_estimate,
    "bias-curve": _cmd_bias_curve,
    "correct": _cmd_correct,
    "kmeans": _cmd_kmeans,
    "protein": _cmd_protein,
    "curvature": _cmd_curvature,
}

_TRUTHY = {"1", "true", "yes", "on"}


def _apply_config_file(parser: argparse.ArgumentParser, argv: list[str]) -> None:
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return
    try:
        text = Path(known.config).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file: {exc}") from exc
    values: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{known.config}:{lineno}: expected key=value")
        key, value = line.split("=", 1)
        values[key.strip().replace("-", "_")] = value.strip()

    actions = {}
    for action in parser._actions:
        actions[action.dest] = action
    for sub_action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        for action in sub_action._actions:
            actions.setdefault(action.dest, action)
    defaults = {}
    for key, value in values.items():
        action = actions.get(key)
        if action is None:
            raise ConfigError(f"unknown config key {key!r}")
        if isinstance(action, argparse._StoreTrueAction):
            defaults[key] = value.lower() in _TRUTHY
        elif action.type is not None:
            try:
                defaults[key] = action.type(value)
            except ValueError as exc:
                raise ConfigError(f"config key {key!r}: {exc}") from exc
        else:
            defaults[key] = value
    parser.set_defaults(**defaults)
    for sub_action in parser._subparsers._group_actions[0].choices.values():  # type: ignore[union-attr]
        sub_action.set_defaults(**{k: v for k, v in defaults.items()
                                   if any(a.dest == k for a in sub_action._actions)})


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    stage_box = ["configuration"]

    def stage(name: str) -> None:
        stage_box[0] = name

    try:
        _apply_config_file(parser, argv)
        args = parser.parse_args(argv)
        _HANDLERS[args.command](args, stage)
    except ConfigError as exc:
        print(f"shapebias: bad configuration: {exc}", file=sys.stderr)
        return 2
    except ShapeBiasError as exc:
        print(f"shapebias: numeric failure in stage '{stage_box[0]}': {exc}", file=sys.stderr)
        return 3
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
