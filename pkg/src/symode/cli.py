"""Command-line front end: solve, verify-symmetry, sample-tmg, export-plot.

Configuration files are flat ``key = value`` text (UTF-8, ``#`` comments).
Exit codes: 0 success, 2 usage or configuration error, 3 runtime error
(the failing pipeline stage is named on standard error).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import lie, tmg
from .charts import FirstOrderFamily, SecondOrderFamily
from .lie import Jet, commutator, expand_in_basis, solvable_2d_order, symmetry_residual
from .pipeline import ConfigError, PipelineError, PosteriorEnsemble, SolveConfig, solve

__all__ = ["main", "run", "read_config", "build_solve_config"]

RESIDUAL_THRESHOLD = 1e-6

CONFIG_KEYS = {
    "family", "F", "x0", "xT", "y0", "y0_prime", "n", "N", "r_max",
    "samples", "burn_in", "seed", "travel_time", "out_dir", "plot",
}


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"config file not found: {path}")
    raw = {}
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.strip()!r}")
        key, value = (part.strip() for part in stripped.split("=", 1))
        if key not in CONFIG_KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown key {key!r}")
        if key in raw:
            raise ConfigError(f"{path}:{lineno}: duplicate key {key!r}")
        raw[key] = value
    return raw


def _get_float(raw: dict, key: str, default=None):
    if key not in raw:
        if default is _REQUIRED:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        return float(raw[key])
    except ValueError:
        raise ConfigError(f"config key {key!r} is not a number: {raw[key]!r}") from None


def _get_int(raw: dict, key: str, default=None):
    if key not in raw:
        if default is _REQUIRED:
            raise ConfigError(f"missing required config key {key!r}")
        return default
    try:
        return int(raw[key])
    except ValueError:
        raise ConfigError(f"config key {key!r} is not an integer: {raw[key]!r}") from None


def _get_bool(raw: dict, key: str, default=False):
    if key not in raw:
        return default
    value = raw[key].lower()
    if value in ("true", "yes", "1"):
        return True
    if value in ("false", "no", "0"):
        return False
    raise ConfigError(f"config key {key!r} is not a boolean: {raw[key]!r}")


_REQUIRED = object()


def build_solve_config(raw: dict) -> SolveConfig:
    """Turn a parsed config mapping into a validated SolveConfig."""
    if "family" not in raw:
        raise ConfigError("missing required config key 'family'")
    return SolveConfig(
        family=raw["family"],
        x_t=_get_float(raw, "xT", _REQUIRED),
        y0=_get_float(raw, "y0", _REQUIRED),
        n=_get_int(raw, "n", _REQUIRED),
        r_max=_get_float(raw, "r_max", _REQUIRED),
        x0=_get_float(raw, "x0", 1.0),
        y0_prime=_get_float(raw, "y0_prime", None),
        gradient=raw.get("F"),
        basis_size=_get_int(raw, "N", None),
        sample_count=_get_int(raw, "samples", 200),
        burn_in=_get_int(raw, "burn_in", 1000),
        seed=_get_int(raw, "seed", 0),
        travel_time=_get_float(raw, "travel_time", tmg.QUARTER_PERIOD),
    )


def _fmt(value: float) -> str:
    return repr(float(value))


def _write_csv(path: Path, header: Sequence[str], columns: Sequence[np.ndarray]) -> None:
    rows = len(columns[0])
    lines = [",".join(header)]
    for i in range(rows):
        lines.append(",".join(_fmt(col[i]) for col in columns))
    path.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")


def _sample_names(prefix: str, count: int) -> list:
    return [f"{prefix}_sample_{i:03d}" for i in range(count)]


def _write_outputs(ensemble: PosteriorEnsemble, out_dir: Path, plot: bool) -> None:
    out_dir.mkdir(parents=True, exist_ok=True)
    m = ensemble.n_samples

    header = ["r"] + _sample_names("s", m)
    columns = [ensemble.grid] + [ensemble.s_curves[i] for i in range(m)]
    _write_csv(out_dir / "ensemble_rs.csv", header, columns)

    xs = ensemble.common_x_grid()
    ys = ensemble.y_on_grid(xs)
    header = ["x"] + _sample_names("y", m)
    columns = [xs] + [ys[i] for i in range(m)]
    _write_csv(out_dir / "ensemble_xy.csv", header, columns)

    s_mean = ensemble.s_curves.mean(axis=0)
    s_q05 = np.quantile(ensemble.s_curves, 0.05, axis=0)
    s_q95 = np.quantile(ensemble.s_curves, 0.95, axis=0)
    y_mean = ys.mean(axis=0)
    y_q05 = np.quantile(ys, 0.05, axis=0)
    y_q95 = np.quantile(ys, 0.95, axis=0)
    _write_csv(
        out_dir / "summary.csv",
        ["r", "s_mean", "s_q05", "s_q95", "x", "y_mean", "y_q05", "y_q95"],
        [ensemble.grid, s_mean, s_q05, s_q95, xs, y_mean, y_q05, y_q95],
    )

    if plot:
        series = [
            (ensemble.grid, ensemble.s_curves[i], "#000000", 0.6, 0.35) for i in range(m)
        ]
        series.append((ensemble.grid, ensemble.env_lower, "#0000cc", 1.2, 1.0))
        series.append((ensemble.grid, ensemble.env_upper, "#0000cc", 1.2, 1.0))
        (out_dir / "posterior.svg").write_text(_render_svg(series), encoding="utf-8")


def _render_svg(series) -> str:
    """Static SVG: one polyline path per series (xs, ys, color, width, opacity)."""
    width, height, margin = 800.0, 600.0, 50.0
    xs_all = np.concatenate([np.asarray(s[0], dtype=float) for s in series])
    ys_all = np.concatenate([np.asarray(s[1], dtype=float) for s in series])
    x_lo, x_hi = float(xs_all.min()), float(xs_all.max())
    y_lo, y_hi = float(ys_all.min()), float(ys_all.max())
    x_span = (x_hi - x_lo) or 1.0
    y_span = (y_hi - y_lo) or 1.0

    def sx(x):
        return margin + (x - x_lo) / x_span * (width - 2 * margin)

    def sy(y):
        return height - margin - (y - y_lo) / y_span * (height - 2 * margin)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:g}" height="{height:g}" '
        f'viewBox="0 0 {width:g} {height:g}">',
        f'<rect x="{margin}" y="{margin}" width="{width - 2 * margin}" '
        f'height="{height - 2 * margin}" fill="none" stroke="#888888"/>',
        f'<text x="{margin}" y="{height - margin / 4}" font-size="12">{x_lo:.6g}</text>',
        f'<text x="{width - margin}" y="{height - margin / 4}" font-size="12" '
        f'text-anchor="end">{x_hi:.6g}</text>',
        f'<text x="{margin / 4}" y="{height - margin}" font-size="12">{y_lo:.6g}</text>',
        f'<text x="{margin / 4}" y="{margin}" font-size="12">{y_hi:.6g}</text>',
    ]
    for xs, ys, color, stroke_width, opacity in series:
        points = " ".join(
            f"{sx(float(x)):.3f},{sy(float(y)):.3f}" for x, y in zip(xs, ys)
        )
        parts.append(
            f'<polyline fill="none" stroke="{color}" stroke-width="{stroke_width}" '
            f'stroke-opacity="{opacity}" points="{points}"/>'
        )
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_solve(args) -> int:
    raw = read_config(args.config)
    config = build_solve_config(raw)
    out_dir = Path(raw.get("out_dir", "."))
    plot = _get_bool(raw, "plot", False)
    ensemble = solve(config)
    _write_outputs(ensemble, out_dir, plot)
    print(f"wrote ensemble_rs.csv, ensemble_xy.csv, summary.csv to {out_dir}")
    return 0


def _on_surface_jets_first_order(family: FirstOrderFamily, count: int, seed: int) -> list:
    rng = np.random.Generator(np.random.Philox(key=seed))
    surface = family.surface()
    jets = []
    while len(jets) < count:
        x = float(rng.uniform(1.0, 4.0))
        y = float(rng.uniform(0.5, 4.0))
        try:
            jets.append(Jet(x, y, (surface.top_derivative(x, y, ()),)))
        except (ArithmeticError, ValueError):
            continue
    return jets


def _on_surface_jets_second_order(count: int, seed: int) -> list:
    rng = np.random.Generator(np.random.Philox(key=seed))
    surface = SecondOrderFamily(5.0, 10.0, -10.0, 1.0).surface()
    jets = []
    while len(jets) < count:
        x = float(rng.uniform(1.0, 6.0))
        y = float(rng.uniform(-8.0, -1.0))
        y1 = float(rng.uniform(0.05, 3.0))
        jets.append(Jet(x, y, (y1, surface.top_derivative(x, y, (y1,)))))
    return jets


def cmd_verify_symmetry(args) -> int:
    if args.family == "first_order":
        from . import expr as expr_mod

        gradient = expr_mod.parse(args.expression)
        family = FirstOrderFamily(gradient, x_t=5.0, y0=1.0)
        generator = family.generators()[0]
        print(f"family: first_order with F(r) = {args.expression}")
        print(f"generator: X = {generator}")
        residual = symmetry_residual(
            family.surface(), generator, _on_surface_jets_first_order(family, 100, args.seed)
        )
        print(f"max symmetry residual over 100 on-surface jets: {residual:.3e}")
        ok = residual < RESIDUAL_THRESHOLD
        print("admitted" if ok else f"NOT admitted (threshold {RESIDUAL_THRESHOLD:g})")
        return 0 if ok else 3
    if args.family != "second_order":
        print(f"unknown family {args.family!r}", file=sys.stderr)
        return 2

    family = SecondOrderFamily(5.0, 10.0, -10.0, 1.0)
    generators = family.generators()
    names = ["X1", "X2", "X3"]
    print("family: second_order")
    for name, generator in zip(names, generators):
        print(f"generator: {name} = {generator}")
    print("commutator table:")
    for i in range(3):
        for j in range(i + 1, 3):
            bracket = commutator(generators[i], generators[j])
            coeffs = expand_in_basis(bracket, generators)
            if coeffs is None:
                combo = str(bracket)
            else:
                terms = [
                    f"{c:+g}*{name}" for c, name in zip(coeffs, names) if abs(c) > 1e-12
                ]
                combo = " ".join(terms) if terms else "0"
            print(f"  [{names[i]},{names[j]}] = {combo}")
    first, second, lam = solvable_2d_order(generators[0], generators[1])
    print(f"solvable ordering of (X1, X2): [A,B] = {lam:+g}*A with A = {first}")
    jets = _on_surface_jets_second_order(100, args.seed)
    worst = max(
        symmetry_residual(family.surface(), generator, jets) for generator in generators
    )
    print(f"max symmetry residual over 100 on-surface jets: {worst:.3e}")
    ok = worst < RESIDUAL_THRESHOLD
    print("admitted" if ok else f"NOT admitted (threshold {RESIDUAL_THRESHOLD:g})")
    return 0 if ok else 3


def _read_constraints(path: Path, dims: int):
    if not path.is_file():
        raise ConfigError(f"constraint file not found: {path}")
    rows = []
    for lineno, line in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        parts = stripped.replace(",", " ").split()
        if len(parts) != dims + 1:
            raise ConfigError(
                f"{path}:{lineno}: expected {dims + 1} numbers (normal then offset), "
                f"got {len(parts)}"
            )
        try:
            rows.append([float(p) for p in parts])
        except ValueError:
            raise ConfigError(f"{path}:{lineno}: non-numeric entry") from None
    if not rows:
        raise ConfigError(f"{path}: no constraints found")
    table = np.array(rows)
    return table[:, :dims], table[:, dims]


def cmd_sample_tmg(args) -> int:
    normals, offsets = _read_constraints(Path(args.constraints), args.dims)
    problem = tmg.TruncatedGaussianProblem(args.dims, normals, offsets)
    chain = tmg.sample(problem, args.count, burn_in=args.burn_in, seed=args.seed)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    header = [f"z_{i:03d}" for i in range(args.dims)]
    _write_csv(out, header, [chain.samples[:, i] for i in range(args.dims)])
    mean = chain.samples.mean(axis=0)
    var = chain.samples.var(axis=0)
    for i in range(args.dims):
        print(f"mean[{i}] = {mean[i]:.6f}")
        print(f"var[{i}] = {var[i]:.6f}")
    print(f"wrote {args.count} samples to {out}")
    return 0


def cmd_export_plot(args) -> int:
    path = Path(args.input)
    if not path.is_file():
        raise ConfigError(f"ensemble file not found: {path}")
    lines = [line for line in path.read_text(encoding="utf-8").splitlines() if line.strip()]
    if len(lines) < 2:
        raise ConfigError(f"{path}: no data rows")
    header = lines[0].split(",")
    table = np.array([[float(cell) for cell in line.split(",")] for line in lines[1:]])
    if table.shape[1] != len(header):
        raise ConfigError(f"{path}: ragged rows")
    abscissa = table[:, 0]
    sample_cols = [i for i, name in enumerate(header) if "_sample_" in name]
    if not sample_cols:
        raise ConfigError(f"{path}: no sample columns in header")
    series = [(abscissa, table[:, i], "#000000", 0.6, 0.35) for i in sample_cols]
    for i, name in enumerate(header):
        if name in ("env_lo", "env_hi"):
            series.append((abscissa, table[:, i], "#0000cc", 1.2, 1.0))
        elif name == "reference":
            series.append((abscissa, table[:, i], "#cc0000", 1.2, 1.0))
    Path(args.output).write_text(_render_svg(series), encoding="utf-8")
    print(f"wrote {args.output}")
    return 0


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="symode",
        description="Bayesian probabilistic solver for ODEs with solvable symmetry algebras",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run the posterior pipeline from a config file")
    p_solve.add_argument("config", help="path to a flat key = value config file")

    p_verify = sub.add_parser("verify-symmetry", help="check the built-in generators")
    p_verify.add_argument("family", help="first_order or second_order")
    p_verify.add_argument(
        "--expression", default="1/r + r",
        help="gradient F(r) for the first-order family (default: 1/r + r)",
    )
    p_verify.add_argument("--seed", type=int, default=0)

    p_tmg = sub.add_parser("sample-tmg", help="sample a truncated Gaussian (diagnostics)")
    p_tmg.add_argument("--dims", type=int, required=True)
    p_tmg.add_argument("--constraints", required=True, help="rows: normal components then offset")
    p_tmg.add_argument("--count", type=int, default=1000)
    p_tmg.add_argument("--burn-in", type=int, default=1000)
    p_tmg.add_argument("--seed", type=int, default=0)
    p_tmg.add_argument("--out", default="tmg_samples.csv")

    p_plot = sub.add_parser("export-plot", help="render an ensemble CSV to SVG")
    p_plot.add_argument("input", help="ensemble CSV (first column is the abscissa)")
    p_plot.add_argument("output", help="output SVG path")

    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exit_:
        return int(exit_.code or 0)
    handlers = {
        "solve": cmd_solve,
        "verify-symmetry": cmd_verify_symmetry,
        "sample-tmg": cmd_sample_tmg,
        "export-plot": cmd_export_plot,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as error:
        print(f"config error: {error}", file=sys.stderr)
        return 2
    except PipelineError as error:
        print(f"runtime error in stage '{error.stage}': {error.cause}", file=sys.stderr)
        return 3
    except Exception as error:  # runtime failures outside the pipeline
        print(f"runtime error: {error}", file=sys.stderr)
        return 3


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
