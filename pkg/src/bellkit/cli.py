"""Command-line front end.

Subcommands: ``eval`` (CH breakdown at given angles), ``optimize`` (best
angles), ``map`` (CH/N grid + contours as CSV files), ``simulate``
(seeded counting run + statistics).  Configuration comes from a flat
key = value file; angles are degrees at this boundary and everything is
converted to radians on parse.

Exit codes: 0 success, 1 internal numeric failure, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile

from .inequality import MODES, AngleSettings, ch_from_counts, ch_sum
from .loophole_map import GridSpec, contours_csv, grid_csv, grid_map
from .montecarlo import RunConfig, counts_csv, simulate_run
from .optimizer import optimize_angles
from .quantum_model import DetectorChannel, EntangledState, MeasurementArm, PolarizerChannel

__all__ = ["main", "ConfigError"]


class ConfigError(ValueError):
    pass


def _conv_float(key, raw):
    try:
        return float(raw)
    except ValueError:
        raise ConfigError(f"config key '{key}': expected a number, got {raw!r}") from None


def _conv_int(key, raw):
    try:
        return int(raw)
    except ValueError:
        raise ConfigError(f"config key '{key}': expected an integer, got {raw!r}") from None


def _conv_mode(key, raw):
    if raw not in MODES:
        raise ConfigError(f"config key '{key}': expected one of {MODES}, got {raw!r}")
    return raw


def _conv_format(key, raw):
    if raw not in ("csv", "json"):
        raise ConfigError(f"config key '{key}': expected 'csv' or 'json', got {raw!r}")
    return raw


# key -> (converter, default); None default means no default (required if used)
_KEYS = {
    "f_mag": (_conv_float, None),
    "f_phase_deg": (_conv_float, 0.0),
    "coherence": (_conv_float, 1.0),
    "eps_par1": (_conv_float, 1.0),
    "eps_perp1": (_conv_float, 0.0),
    "eps_par2": (_conv_float, 1.0),
    "eps_perp2": (_conv_float, 0.0),
    "efficiency1": (_conv_float, 1.0),
    "efficiency2": (_conv_float, 1.0),
    "background_rate1": (_conv_float, 0.0),
    "background_rate2": (_conv_float, 0.0),
    "theta1_deg": (_conv_float, None),
    "theta2_deg": (_conv_float, None),
    "theta1p_deg": (_conv_float, None),
    "theta2p_deg": (_conv_float, None),
    "mode": (_conv_mode, "heralded"),
    "eta_min": (_conv_float, 0.5),
    "eta_max": (_conv_float, 1.0),
    "eta_steps": (_conv_int, 40),
    "f_min": (_conv_float, 0.01),
    "f_max": (_conv_float, 1.0),
    "f_steps": (_conv_int, 40),
    "map_eps_par": (_conv_float, 1.0),
    "map_eps_perp": (_conv_float, 0.0),
    "pair_rate": (_conv_float, None),
    "duration_s": (_conv_float, None),
    "coincidence_window_s": (_conv_float, 1e-9),
    "seed": (_conv_int, 1),
    "format": (_conv_format, "csv"),
}


def parse_config(path: str) -> dict:
    """Flat key = value file; '#' starts a comment; unknown keys rejected."""
    values = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path!r}: {exc}") from None
    for lineno, line in enumerate(lines, start=1):
        stripped = line.split("#", 1)[0].strip()
        if not stripped:
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected 'key = value', got {line.rstrip()!r}")
        key, raw = (part.strip() for part in stripped.split("=", 1))
        if key not in _KEYS:
            raise ConfigError(f"{path}:{lineno}: unknown config key '{key}'")
        if key in values:
            raise ConfigError(f"{path}:{lineno}: duplicate config key '{key}'")
        values[key] = _KEYS[key][0](key, raw)
    cfg = {k: default for k, (_, default) in _KEYS.items()}
    cfg.update(values)
    return cfg


def _need(cfg, *keys):
    for key in keys:
        if cfg[key] is None:
            raise ConfigError(f"missing required config key '{key}'")


def _build_state(cfg) -> EntangledState:
    _need(cfg, "f_mag")
    try:
        return EntangledState(cfg["f_mag"], math.radians(cfg["f_phase_deg"]),
                              cfg["coherence"])
    except ValueError as exc:
        raise ConfigError(f"invalid state parameters: {exc}") from None


def _build_arms(cfg):
    try:
        arm1 = MeasurementArm(
            PolarizerChannel(cfg["eps_par1"], cfg["eps_perp1"]),
            DetectorChannel(cfg["efficiency1"], cfg["background_rate1"]))
        arm2 = MeasurementArm(
            PolarizerChannel(cfg["eps_par2"], cfg["eps_perp2"]),
            DetectorChannel(cfg["efficiency2"], cfg["background_rate2"]))
    except ValueError as exc:
        raise ConfigError(f"invalid arm parameters: {exc}") from None
    return arm1, arm2


def _build_settings(cfg) -> AngleSettings:
    _need(cfg, "theta1_deg", "theta2_deg", "theta1p_deg", "theta2p_deg")
    try:
        return AngleSettings.from_degrees(cfg["theta1_deg"], cfg["theta2_deg"],
                                          cfg["theta1p_deg"], cfg["theta2p_deg"])
    except ValueError as exc:
        raise ConfigError(f"invalid angles: {exc}") from None


def _build_gridspec(cfg) -> GridSpec:
    try:
        pol = PolarizerChannel(cfg["map_eps_par"], cfg["map_eps_perp"])
        return GridSpec(cfg["eta_min"], cfg["eta_max"], cfg["eta_steps"],
                        cfg["f_min"], cfg["f_max"], cfg["f_steps"], pol)
    except ValueError as exc:
        raise ConfigError(f"invalid grid spec: {exc}") from None


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "yes" if v else "no"
    if isinstance(v, int):
        return str(v)
    if isinstance(v, float):
        if math.isnan(v):
            return "nan"
        return f"{v:.9g}"
    return str(v)


def _json_value(v):
    if isinstance(v, float):
        if math.isnan(v):
            return None
        return float(f"{v:.9g}")
    if isinstance(v, bool) or isinstance(v, int) or isinstance(v, str):
        return v
    return v


def render_report(report: dict, fmt: str) -> str:
    """CSV renders 'quantity,value' rows; JSON the same mapping.  Both carry
    identical numeric values at 9 significant digits."""
    if fmt == "json":
        return json.dumps({k: _json_value(v) for k, v in report.items()},
                          indent=2) + "\n"
    lines = ["quantity,value"]
    for k, v in report.items():
        lines.append(f"{k},{_fmt(v)}")
    return "\n".join(lines) + "\n"


def _write_atomic(path: str, content: str):
    d = os.path.dirname(path) or "."
    os.makedirs(d, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=d, prefix=".bellkit-tmp-")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _breakdown_report(b, mode) -> dict:
    return {
        "mode": mode,
        "n_t1t2": b.n_t1t2,
        "n_t1t2p": b.n_t1t2p,
        "n_t1pt2": b.n_t1pt2,
        "n_t1pt2p": b.n_t1pt2p,
        "n_t1p_inf": b.n_t1p_inf,
        "n_inf_t2": b.n_inf_t2,
        "ch": b.ch,
        "ratio": b.ratio,
    }


def cmd_eval(cfg, args) -> int:
    state = _build_state(cfg)
    arm1, arm2 = _build_arms(cfg)
    settings = _build_settings(cfg)
    mode = args.mode or cfg["mode"]
    b = ch_sum(state, arm1, arm2, settings, mode)
    out = render_report(_breakdown_report(b, mode), args.format or cfg["format"])
    sys.stdout.write(out)
    return 0


def cmd_optimize(cfg, args) -> int:
    state = _build_state(cfg)
    arm1, arm2 = _build_arms(cfg)
    mode = args.mode or cfg["mode"]
    res = optimize_angles(state, arm1, arm2, mode)
    degs = res.settings.degrees()
    report = {
        "mode": mode,
        "theta1_deg": float(f"{degs[0]:.2f}"),
        "theta2_deg": float(f"{degs[1]:.2f}"),
        "theta1p_deg": float(f"{degs[2]:.2f}"),
        "theta2p_deg": float(f"{degs[3]:.2f}"),
        "ch": res.ch,
        "ratio": res.ratio,
        "violation": res.ch > 0,
        "converged": res.converged,
        "evaluations": res.evaluations,
    }
    sys.stdout.write(render_report(report, args.format or cfg["format"]))
    return 0


def cmd_map(cfg, args) -> int:
    spec = _build_gridspec(cfg)
    result = grid_map(spec)
    out_dir = args.out or "."
    _write_atomic(os.path.join(out_dir, "grid.csv"), grid_csv(result))
    _write_atomic(os.path.join(out_dir, "contours.csv"), contours_csv(result))
    sys.stdout.write(f"wrote {os.path.join(out_dir, 'grid.csv')}\n")
    sys.stdout.write(f"wrote {os.path.join(out_dir, 'contours.csv')}\n")
    return 0


def cmd_simulate(cfg, args) -> int:
    state = _build_state(cfg)
    arm1, arm2 = _build_arms(cfg)
    settings = _build_settings(cfg)
    _need(cfg, "pair_rate", "duration_s")
    seed = args.seed if args.seed is not None else cfg["seed"]
    try:
        run = RunConfig(cfg["pair_rate"], cfg["duration_s"],
                        cfg["coincidence_window_s"], seed, state, arm1, arm2,
                        settings)
    except ValueError as exc:
        raise ConfigError(f"invalid run config: {exc}") from None
    record = simulate_run(run)
    b = ch_from_counts(record)
    report = {
        "seed": seed,
        "ch": b.ch,
        "sigma_ch": b.sigma_ch if b.sigma_ch is not None else math.nan,
        "z_score": b.z_score if b.z_score is not None else math.nan,
        "ratio": b.ratio,
        "sigma_ratio": b.sigma_ratio if b.sigma_ratio is not None else math.nan,
    }
    fmt = args.format or cfg["format"]
    out_dir = args.out or "."
    _write_atomic(os.path.join(out_dir, "counts.csv"), counts_csv(record))
    analysis_name = "analysis.json" if fmt == "json" else "analysis.csv"
    rendered = render_report(report, fmt)
    _write_atomic(os.path.join(out_dir, analysis_name), rendered)
    sys.stdout.write(rendered)
    return 0


def _apply_thread_cap():
    raw = os.environ.get("BELLKIT_THREADS")
    if raw is None:
        return
    try:
        n = int(raw)
        if n < 1:
            raise ValueError
    except ValueError:
        raise ConfigError(f"BELLKIT_THREADS must be a positive integer, got {raw!r}") from None
    from . import _kernels
    if _kernels.NUMBA_ENABLED:
        import warnings

        import numba

        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # threading-layer probe noise
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bellkit",
        description="Entangled-pair CH inequality toolkit")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn in (("eval", cmd_eval), ("optimize", cmd_optimize),
                     ("map", cmd_map), ("simulate", cmd_simulate)):
        p = sub.add_parser(name)
        p.add_argument("--config", required=True, help="flat key = value config file")
        p.add_argument("--out", default=None, help="output directory for file-producing commands")
        p.add_argument("--format", choices=("csv", "json"), default=None)
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--mode", choices=MODES, default=None)
        p.set_defaults(func=fn)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        _apply_thread_cap()
        cfg = parse_config(args.config)
        return args.func(cfg, args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # numeric or internal failure
        print(f"internal error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
