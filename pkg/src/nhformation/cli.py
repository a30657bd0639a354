"""Command-line front end.

Subcommands::

    nhformation validate CONFIG
    nhformation run CONFIG [-o DIR] [--seed N] [--dt DT] [--noise-d STD] [--noise-theta STD] [--no-noise]
    nhformation report --g-d G [--a-eff A] [--v-max V --u-max U --omega-max W]
    nhformation metrics RUN_DIR
    nhformation plot RUN_DIR [--channel COL ...]
    nhformation list

``CONFIG`` is a path or the name of a bundled scenario (see ``list``).

Exit codes: 0 success, 2 configuration or parse error, 3 validation failure
(gains, graph or feasibility), 4 the run aborted (partial logs are still
written).
"""

from __future__ import annotations

import argparse
import math
import sys
from pathlib import Path

import numpy as np
import yaml

from .dynamics import ActuationLimits
from .estimator import GainError, NotHurwitzError, derive_gains, error_matrix, guub_bounds, solve_lyapunov
from .graph import GraphValidationError, validate
from .harness.config import (
    ESTIMATION,
    ConfigError,
    ScenarioConfig,
    bundled_scenarios,
    config_from_dict,
    read_raw,
    resolve_scenario,
)
from .harness.metrics import (
    bound_report,
    compute_metrics,
    read_metrics,
    summary_line,
    write_metrics,
)
from .harness.sim import SimLog, SimulationAborted, log_meta, run_scenario
from .kernels import BACKEND

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_VALIDATION = 3
EXIT_RUNTIME = 4


def _err(msg: str) -> None:
    print(f"error: {msg}", file=sys.stderr)


def block_eigenvalues(g_d: float, g_v: float) -> tuple[float, float]:
    """Roots of ``s**2 - g_d s - g_v``; each appears twice in ``A(0)``."""
    disc = math.sqrt(g_d * g_d / 4.0 + g_v) if g_d * g_d / 4.0 + g_v >= 0 else float("nan")
    return (g_d / 2.0 + disc, g_d / 2.0 - disc)


def theory_lines(g_d: float, a_eff: float | None = None,
                 limits: ActuationLimits | None = None) -> list[str]:
    """Gains, spectrum, Lyapunov certificate and bounds as printable lines.

    Raises:
        GainError: invalid ``g_d``.
    """
    gains = derive_gains(g_d)
    A0 = error_matrix(gains, 0.0)
    cert = solve_lyapunov(A0, np.eye(4))
    eig = sorted(np.linalg.eigvals(A0).real, reverse=True)
    lines = [
        f"g_d = {gains.g_d:.12g}",
        f"g_v = {gains.g_v:.12g}",
        f"p   = {gains.p:.12g}",
        f"r   = {gains.r:.12g}",
        f"k_d = {gains.k_d:.12g}",
        "A0 eigenvalues = " + ", ".join(f"{z:.10g}" for z in eig),
        "A0 eigenvalues (closed form) = "
        + ", ".join(f"{z:.12g}" for z in sorted(2 * block_eigenvalues(gains.g_d, gains.g_v), reverse=True)),
        f"Hurwitz window -g_d^2/4 <= g_v < 0: {'ok' if -gains.g_d ** 2 / 4 <= gains.g_v < 0 else 'violated'}",
        f"Lyapunov (Q = I): residual = {cert.residual:.3e}, "
        f"P eigenvalues = " + ", ".join(f"{z:.6g}" for z in cert.P_eigenvalues)
        + f", certificate {'valid' if cert.valid else 'INVALID'}",
    ]
    if limits is not None:
        lines.append(f"limits: v_max = {limits.v_max:g}, u_max = {limits.u_max:g}, "
                     f"omega_max = {limits.omega_max:g}, a_max = {limits.a_max:g}")
        if a_eff is None:
            a_eff = limits.u_max
    if a_eff is not None:
        b = guub_bounds(gains, a_eff)
        lines += [
            f"bounds for a_eff = {b.a_eff:g} (c_i = {b.c_i:g}):",
            f"  eps_d = {b.eps_d:.6g}   eps_v = {b.eps_v:.6g}   "
            f"velocity envelope r*eps_d + eps_v = {b.velocity_envelope:.6g}",
            f"  eps_x = {b.eps_x:.6g}   eps_y = {b.eps_y:.6g}",
        ]
    return lines


def validation_lines(cfg: ScenarioConfig) -> tuple[bool, list[str]]:
    """Gain derivation, Hurwitz check, graph and feasibility checks."""
    lines = [f"scenario: {cfg.name} ({cfg.kind}, {cfg.n_steps} steps of {cfg.dt:g} s)"]
    try:
        gains = derive_gains(cfg.g_d)
    except GainError as exc:
        return False, lines + [f"FAIL gains: {exc}"]
    lines.append(f"ok   gains: g_v = {gains.g_v:.6g}, p = {gains.p:.6g}, r = {gains.r:.6g}, "
                 f"k_d = {gains.k_d:.6g}")
    try:
        cert = solve_lyapunov(error_matrix(gains, 0.0), np.eye(4))
    except NotHurwitzError as exc:
        return False, lines + [f"FAIL Hurwitz: {exc}"]
    ok = cert.valid
    lines.append(f"{'ok  ' if ok else 'FAIL'} Hurwitz: eigenvalues "
                 + ", ".join(f"{z.real:.6g}" for z in sorted(cert.eigenvalues, key=lambda z: -z.real))
                 + f"; Lyapunov residual {cert.residual:.2e}")
    if cfg.kind == ESTIMATION:
        lines.append("ok   observers: " + ", ".join(f"{o}>{t}" for o, t in cfg.observers))
        return ok, lines
    rep = validate(cfg.graph, gains)
    for note in rep.notes:
        lines.append(f"ok   {note}")
    for e in rep.errors:
        lines.append(f"FAIL {e}")
    if rep.ok:
        lines.append("ok   topology: evaluation order " + " -> ".join(rep.order))
    return ok and rep.ok, lines


def _load(path_or_name: str, overrides: dict | None = None) -> tuple[ScenarioConfig, dict]:
    path = resolve_scenario(path_or_name)
    raw = read_raw(path, overrides)
    return config_from_dict(raw, source=str(path)), raw


def cmd_validate(args) -> int:
    try:
        cfg, _ = _load(args.config)
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    ok, lines = validation_lines(cfg)
    print("\n".join(lines))
    print("PASS" if ok else "FAIL")
    return EXIT_OK if ok else EXIT_VALIDATION


def _overrides(args) -> dict:
    ov: dict = {}
    if args.seed is not None:
        ov["seed"] = args.seed
    if args.dt is not None:
        ov["dt"] = args.dt
    noise = {}
    if args.no_noise:
        noise = {"d_std": 0.0, "theta_std": 0.0}
    if args.noise_d is not None:
        noise["d_std"] = args.noise_d
    if args.noise_theta is not None:
        noise["theta_std"] = args.noise_theta
    if noise:
        ov["noise"] = noise
    return ov


def write_run(out: Path, cfg: ScenarioConfig, raw: dict, log: SimLog) -> dict[str, float]:
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "scenario.yaml", "w") as fh:
        yaml.safe_dump(raw, fh, sort_keys=False)
    log.to_csv(out / "log.csv")
    metrics = compute_metrics(log, cfg)
    write_metrics(metrics, out / "metrics.txt")
    rep = bound_report(log, cfg)
    (out / "bounds.txt").write_text("\n".join(rep.lines()) + "\n")
    return metrics


def cmd_run(args) -> int:
    try:
        cfg, raw = _load(args.config, _overrides(args))
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    ok, lines = validation_lines(cfg)
    if not ok:
        print("\n".join(lines), file=sys.stderr)
        _err("validation failed; nothing was run")
        return EXIT_VALIDATION
    out = Path(args.output or Path("runs") / cfg.name)
    try:
        log = run_scenario(cfg, backend=args.backend)
    except GraphValidationError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    except SimulationAborted as exc:
        out.mkdir(parents=True, exist_ok=True)
        with open(out / "scenario.yaml", "w") as fh:
            yaml.safe_dump(raw, fh, sort_keys=False)
        exc.log.to_csv(out / "log.csv")
        (out / "ABORTED").write_text(exc.reason + "\n")
        _err(f"run aborted: {exc.reason} ({len(exc.log)} records written to {out / 'log.csv'})")
        return EXIT_RUNTIME
    metrics = write_run(out, cfg, raw, log)
    print(summary_line(cfg, metrics) + f"  -> {out}")
    return EXIT_OK


def cmd_report(args) -> int:
    limits = None
    if any(x is not None for x in (args.v_max, args.u_max, args.omega_max)):
        try:
            limits = ActuationLimits(args.v_max or 1.0, args.u_max or 0.5, args.omega_max or 2.0)
        except ValueError as exc:
            _err(str(exc))
            return EXIT_CONFIG
    if args.a_eff is not None and not args.a_eff > 0:
        _err("a_eff must be positive")
        return EXIT_CONFIG
    try:
        lines = theory_lines(args.g_d, args.a_eff, limits)
    except GainError as exc:
        _err(str(exc))
        return EXIT_VALIDATION
    print("\n".join(lines))
    return EXIT_OK


def cmd_metrics(args) -> int:
    run = Path(args.run_dir)
    try:
        cfg, _ = _load(str(run / "scenario.yaml"))
    except ConfigError as exc:
        _err(str(exc))
        return EXIT_CONFIG
    if not (run / "log.csv").exists():
        _err(f"{run / 'log.csv'} not found")
        return EXIT_CONFIG
    log = SimLog.from_csv(run / "log.csv", meta=log_meta(cfg))
    metrics = compute_metrics(log, cfg)
    for k, v in metrics.items():
        print(f"{k} = {float(v)!r}")
    stored = run / "metrics.txt"
    if stored.exists():
        same = read_metrics(stored) == metrics
        print(f"# matches {stored}: {'yes' if same else 'NO'}")
    return EXIT_OK


def _svg(t: np.ndarray, series: dict[str, np.ndarray], title: str) -> str:
    W, H, m = 720, 360, 48
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"]
    ys = np.concatenate(list(series.values()))
    lo, hi = float(ys.min()), float(ys.max())
    if hi == lo:
        hi, lo = hi + 1.0, lo - 1.0
    t0, t1 = float(t[0]), float(t[-1]) if t[-1] > t[0] else float(t[0]) + 1.0

    def px(x):
        return m + (x - t0) / (t1 - t0) * (W - 2 * m)

    def py(y):
        return H - m - (y - lo) / (hi - lo) * (H - 2 * m)

    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" font-family="sans-serif" font-size="11">',
             f'<rect width="{W}" height="{H}" fill="white"/>',
             f'<text x="{W / 2}" y="18" text-anchor="middle" font-size="13">{title}</text>',
             f'<rect x="{m}" y="{m}" width="{W - 2 * m}" height="{H - 2 * m}" fill="none" stroke="#888"/>',
             f'<text x="{m}" y="{H - m + 16}">{t0:g} s</text>',
             f'<text x="{W - m}" y="{H - m + 16}" text-anchor="end">{t1:g} s</text>',
             f'<text x="{m - 4}" y="{m + 4}" text-anchor="end">{hi:.4g}</text>',
             f'<text x="{m - 4}" y="{H - m}" text-anchor="end">{lo:.4g}</text>']
    step = max(1, len(t) // 2000)
    for k, (name, y) in enumerate(series.items()):
        c = colors[k % len(colors)]
        pts = " ".join(f"{px(a):.2f},{py(b):.2f}" for a, b in zip(t[::step], y[::step]))
        parts.append(f'<polyline fill="none" stroke="{c}" stroke-width="1.2" points="{pts}"/>')
        parts.append(f'<text x="{W - m + 4 - 100}" y="{m + 14 + 14 * k}" fill="{c}">{name}</text>')
    parts.append("</svg>")
    return "\n".join(parts)


def cmd_plot(args) -> int:
    run = Path(args.run_dir)
    if not (run / "log.csv").exists():
        _err(f"{run / 'log.csv'} not found")
        return EXIT_CONFIG
    log = SimLog.from_csv(run / "log.csv")
    channels = args.channel or [c for c in log.columns if c.endswith((".v", ".omega", ".e_pos"))]
    groups: dict[str, list[str]] = {}
    for c in channels:
        if c not in log:
            _err(f"no column {c!r} in {run / 'log.csv'}")
            return EXIT_CONFIG
        groups.setdefault(c.rsplit(".", 1)[-1], []).append(c)
    for field_name, cols in groups.items():
        path = run / f"plot_{field_name}.svg"
        path.write_text(_svg(log.t, {c: log.col(c) for c in cols}, field_name))
        print(path)
    return EXIT_OK


def cmd_list(args) -> int:
    for name, path in bundled_scenarios().items():
        desc = ""
        try:
            desc = " ".join(str((yaml.safe_load(path.read_text()) or {}).get("description", "")).split())
        except yaml.YAMLError:
            pass
        print(f"{name:32s} {desc}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="nhformation", description=__doc__.split("\n\n")[0])
    p.add_argument("--version", action="version", version=f"%(prog)s (kernel backend: {BACKEND})")
    sub = p.add_subparsers(dest="command", required=True)

    v = sub.add_parser("validate", help="check gains, Hurwitz property, graph and feasibility")
    v.add_argument("config")
    v.set_defaults(func=cmd_validate)

    r = sub.add_parser("run", help="simulate a scenario and write log.csv, metrics.txt, bounds.txt")
    r.add_argument("config")
    r.add_argument("-o", "--output", help="output directory (default runs/<name>)")
    r.add_argument("--seed", type=int)
    r.add_argument("--dt", type=float)
    r.add_argument("--noise-d", type=float, help="range noise std (m)")
    r.add_argument("--noise-theta", type=float, help="bearing noise std (rad)")
    r.add_argument("--no-noise", action="store_true", help="disable sensor noise")
    r.add_argument("--backend", choices=("cython", "python"), help="force a kernel backend")
    r.set_defaults(func=cmd_run)

    t = sub.add_parser("report", help="gain table, spectrum, Lyapunov certificate and bounds")
    t.add_argument("--g-d", type=float, required=True, dest="g_d")
    t.add_argument("--a-eff", type=float, help="acceleration bound for the error bounds")
    t.add_argument("--v-max", type=float)
    t.add_argument("--u-max", type=float)
    t.add_argument("--omega-max", type=float)
    t.set_defaults(func=cmd_report)

    m = sub.add_parser("metrics", help="recompute metrics from a run directory")
    m.add_argument("run_dir")
    m.set_defaults(func=cmd_metrics)

    g = sub.add_parser("plot", help="write SVG line charts from a run directory")
    g.add_argument("run_dir")
    g.add_argument("--channel", action="append", help="log column (repeatable)")
    g.set_defaults(func=cmd_plot)

    ls = sub.add_parser("list", help="list bundled scenarios")
    ls.set_defaults(func=cmd_list)
    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
