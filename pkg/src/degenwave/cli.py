"""Command line front end: check | simulate | spectrum | fit | sweep.

Configuration is a JSON document whose keys carry their units where they
have any::

    {
      "profile": {"kind": "power", "gamma": 0.5},
      "alpha": 0.1, "beta": 1.0, "rho": 1.0, "tau": 0.5, "omega_per_time": 1.0,
      "simulation": {"n_cells": 128, "dt_time": null, "t_final_time": 100.0,
                     "initial": "first_eigenmode", "fields": "uv", "rule": "midpoint"},
      "quadrature": {"nodes": 200, "s_min": 1e-4, "s_max": 1e4},
      "spectrum": {"k_min": 30, "k_max": 60},
      "fit": {"window_time": [100.0, 10000.0]},
      "condition_c": {"K": 50, "tol": 1e-9}
    }

Exit codes: 0 success, 1 run failure, 2 validation or condition-(C)
violations, 3 unreadable configuration, 4 spectral count mismatch.
"""
from __future__ import annotations

import argparse
import copy
import csv
import datetime as _dt
import hashlib
import io
import itertools
import json
import math
import os
import platform
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .decay import DEFAULT_WINDOW, InsufficientDecayError, fit_decay_exponent, optimality_report, predicted_exponent
from .fracdiff import FractionalKernel, build_quadrature
from .model import (DegeneracyProfile, DivergenceError, ProblemConfig, check_condition_C,
                    poincare_constant, validate)
from .spectrum import CountMismatchError, compute_spectrum
from .timestep import BlowUpError, ConfigError, EnergyTrace, simulate

__all__ = ["main", "load_config", "config_from_dict", "RunManifest", "write_csv", "run_sweep_cell"]

EXIT_OK, EXIT_FAIL, EXIT_VIOLATION, EXIT_PARSE, EXIT_COUNT = 0, 1, 2, 3, 4

DEFAULTS = {
    "profile": {"kind": "power", "gamma": 0.5},
    "alpha": 0.1,
    "beta": 1.0,
    "rho": 1.0,
    "tau": 0.5,
    "omega_per_time": 1.0,
    "simulation": {"n_cells": 128, "dt_time": None, "t_final_time": 100.0,
                   "initial": "first_eigenmode", "fields": "uv", "rule": "midpoint"},
    "quadrature": {"nodes": 200, "s_min": 1e-4, "s_max": 1e4},
    "spectrum": {"k_min": 30, "k_max": 60},
    "fit": {"window_time": list(DEFAULT_WINDOW)},
    "condition_c": {"K": 50, "tol": 1e-9},
}


class ConfigParseError(ValueError):
    pass


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def _profile_from(doc: dict) -> DegeneracyProfile:
    kind = doc.get("kind", "power")
    if kind == "power":
        return DegeneracyProfile.power(float(doc["gamma"]))
    if kind == "oscillating":
        return DegeneracyProfile.oscillating(float(doc["varpi"]), float(doc["theta"]))
    if kind == "tabulated":
        return DegeneracyProfile.tabulated(doc["x"], doc["a"], doc["da"])
    raise ConfigParseError(f"unknown profile kind {kind!r}")


def config_from_dict(doc: dict) -> tuple[ProblemConfig, dict]:
    """Build the problem configuration; returns it with the fully merged document."""
    if not isinstance(doc, dict):
        raise ConfigParseError("configuration must be a JSON object")
    full = _merge(DEFAULTS, doc)
    try:
        kernel = FractionalKernel(float(full["tau"]), float(full["omega_per_time"]), float(full["rho"]))
        cfg = ProblemConfig(_profile_from(full["profile"]), float(full["alpha"]), float(full["beta"]), kernel)
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigParseError(str(exc)) from exc
    return cfg, full


def load_config(path: str | os.PathLike) -> tuple[ProblemConfig, dict]:
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigParseError(f"cannot read {path}: {exc}") from exc
    return config_from_dict(doc)


# ---------------------------------------------------------------------------
# persistence


def _fmt(x) -> str:
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.16e}"


def write_csv(path: Path, header: list[str], rows) -> None:
    """CSV with 17 significant digits for floats, integers verbatim."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    path.write_text(buf.getvalue(), encoding="utf-8")


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


@dataclass
class RunManifest:
    command: str
    config: dict
    quadrature_error: float | None
    started: str
    finished: str = ""
    versions: dict = field(default_factory=dict)
    files: list = field(default_factory=list)
    extra: dict = field(default_factory=dict)

    def add(self, path: Path) -> None:
        self.files.append({"name": path.name, "bytes": path.stat().st_size, "sha256": _sha256(path)})

    def write(self, out: Path) -> Path:
        self.finished = _now()
        self.versions = _versions()
        doc = {
            "command": self.command,
            "config": self.config,
            "quadrature_error": self.quadrature_error,
            "started": self.started,
            "finished": self.finished,
            "versions": self.versions,
            "files": self.files,
            **({"extra": self.extra} if self.extra else {}),
        }
        path = out / "manifest.json"
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n",
                        encoding="utf-8")
        return path


def _json_default(o):
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _now() -> str:
    return _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")


def _versions() -> dict:
    import scipy

    out = {"degenwave": __version__, "numpy": np.__version__, "scipy": scipy.__version__,
           "python": platform.python_version()}
    try:
        import matplotlib

        out["matplotlib"] = matplotlib.__version__
    except ImportError:  # pragma: no cover
        pass
    return out


def _svg_energy(path: Path, trace: EnergyTrace) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "degenwave"
    fig, ax = plt.subplots(figsize=(6, 4))
    m = trace.t > 0
    ax.loglog(trace.t[m], np.abs(trace.total[m]), lw=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("E(t)")
    ax.grid(True, which="both", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _svg_decay(path: Path, t, E, report, k=None, trend=None) -> None:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    plt.rcParams["svg.hashsalt"] = "degenwave"
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(10, 4))
    m = (t > 0) & (E > 0)
    a1.loglog(t[m], E[m], lw=1.2, label="E(t)")
    ta, tb = report.window
    tt = np.geomspace(ta, tb, 50)
    a1.loglog(tt, np.exp(report.intercept) * tt ** (-report.s_fit), "--",
              label=f"fit s = {report.s_fit:.3f}")
    a1.set_xlabel("t")
    a1.set_ylabel("E")
    a1.legend()
    if k is not None and trend is not None and len(k):
        a2.plot(k, trend, "o-", ms=3)
        a2.set_xlabel("k")
        a2.set_ylabel("|Re lambda_2,k| k^p")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)


def _write_trace(out: Path, trace: EnergyTrace) -> Path:
    cols = trace.columns()
    header = list(cols)
    path = out / "energy.csv"
    write_csv(path, header, zip(*[cols[h] for h in header]))
    return path


def _read_trace(path: Path) -> tuple[np.ndarray, np.ndarray]:
    with open(path, encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    return (np.array([float(r["t"]) for r in rows]), np.array([float(r["E_total"]) for r in rows]))


# ---------------------------------------------------------------------------
# commands


def _check_report(cfg: ProblemConfig, full: dict) -> tuple[list[str], list[str]]:
    lines, problems = [], []
    m = cfg.m_a if not [v for v in validate(cfg) if v.code == "degeneracy"] else math.nan
    lines.append(f"{'m_a':<28}{m:.6g}")
    if math.isfinite(m):
        lines.append(f"{'regime':<28}{cfg.regime.value}")
    try:
        cstar = poincare_constant(cfg.profile)
        lines.append(f"{'Poincare constant C*':<28}{cstar:.10g}")
    except (DivergenceError, ValueError):
        lines.append(f"{'Poincare constant C*':<28}diverges (m_a >= 1)")
    for v in validate(cfg):
        problems.append(f"{v.code}: {v.message}")
    if cfg.profile.is_power and cfg.gamma < 2.0:
        cc = full["condition_c"]
        rep = check_condition_C(cfg.alpha, cfg.gamma, int(cc["K"]), float(cc["tol"]))
        if rep.exact:
            lines.append(f"{'condition (C)':<28}holds for k, m <= {rep.K}")
        else:
            for k, mm, akm in rep.violations:
                problems.append(f"condition-C: alpha matches alpha_(k,m) at (k,m)=({k},{mm}), "
                                f"alpha_km={akm:.12g}")
    return lines, problems


def cmd_check(args) -> int:
    try:
        cfg, full = load_config(args.config)
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    lines, problems = _check_report(cfg, full)
    for line in lines:
        print(line)
    if problems:
        print("violations:")
        for p in problems:
            print(f"  - {p}")
        return EXIT_VIOLATION
    print("ok")
    return EXIT_OK


def _apply_overrides(full: dict, args) -> dict:
    sim = full["simulation"]
    if getattr(args, "n_cells", None) is not None:
        sim["n_cells"] = args.n_cells
    if getattr(args, "dt", None) is not None:
        sim["dt_time"] = args.dt
    if getattr(args, "t_final", None) is not None:
        sim["t_final_time"] = args.t_final
    sp_ = full["spectrum"]
    if getattr(args, "k_min", None) is not None:
        sp_["k_min"] = args.k_min
    if getattr(args, "k_max", None) is not None:
        sp_["k_max"] = args.k_max
    return full


def _run_simulation(cfg: ProblemConfig, full: dict, check: bool) -> EnergyTrace:
    sim, qd = full["simulation"], full["quadrature"]
    quad = None
    if not cfg.kernel.is_direct:
        quad = build_quadrature(cfg.kernel, int(qd["nodes"]), (float(qd["s_min"]), float(qd["s_max"])))
    init = {"fields": sim.get("fields", "uv")}
    return simulate(cfg, int(sim["n_cells"]), sim["dt_time"], float(sim["t_final_time"]),
                    sim.get("initial", "first_eigenmode"), rule=sim.get("rule", "midpoint"),
                    check=check, quad=quad, init_kwargs=init)


def _prepare(args, command: str):
    cfg, full = load_config(args.config)
    full = _apply_overrides(full, args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    return cfg, full, out, RunManifest(command=command, config=full, quadrature_error=None, started=_now())


def cmd_simulate(args) -> int:
    try:
        cfg, full, out, man = _prepare(args, "simulate")
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    if not args.force:
        _, problems = _check_report(cfg, full)
        if problems:
            print("refusing to simulate an inadmissible configuration (use --force):", file=sys.stderr)
            for p in problems:
                print(f"  - {p}", file=sys.stderr)
            return EXIT_VIOLATION
    status = EXIT_OK
    try:
        trace = _run_simulation(cfg, full, check=False)
    except BlowUpError as exc:
        print(f"error: {exc}; partial trace written", file=sys.stderr)
        trace, status = exc.trace, EXIT_FAIL
    except Exception as exc:  # noqa: BLE001 - report any step failure as exit 1
        print(f"error: simulation failed: {exc}", file=sys.stderr)
        return EXIT_FAIL
    man.quadrature_error = trace.quadrature_error
    man.add(_write_trace(out, trace))
    if args.svg:
        p = out / "energy.svg"
        _svg_energy(p, trace)
        man.add(p)
    man.extra = {"dt": trace.dt, "steps": trace.meta.get("steps"), "E0": float(trace.total[0]),
                 "E_final": float(trace.total[-1]),
                 "status": "ok" if status == EXIT_OK else "blow-up"}
    man.write(out)
    print(f"wrote {out / 'energy.csv'} ({trace.t.size} samples, dt={trace.dt:.6g})")
    return status


def _spectrum_rows(res):
    rows = []
    for e in sorted(res.roots, key=lambda e: (e.family, e.k)):
        rows.append((e.family, e.k, e.lam.real, e.lam.imag, e.residual, e.seed.real, e.seed.imag))
    return rows


def cmd_spectrum(args) -> int:
    try:
        cfg, full, out, man = _prepare(args, "spectrum")
    except ConfigParseError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    spc = full["spectrum"]
    try:
        res = compute_spectrum(cfg, (int(spc["k_min"]), int(spc["k_max"])))
    except CountMismatchError as exc:
        print(f"error: {exc}; window = {exc.window}", file=sys.stderr)
        return EXIT_COUNT
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    p = out / "spectrum.csv"
    write_csv(p, ["family", "k", "re", "im", "residual", "seed_re", "seed_im"], _spectrum_rows(res))
    man.add(p)
    k2, t2 = res.trend(2)
    k1, t1 = res.trend(1)
    p = out / "trend.csv"
    write_csv(p, ["k", "family2_re_times_k_power", "family1_re_times_k_power"],
              [(int(k), a, b) for k, a, b in zip(k2, t2, t1)])
    man.add(p)
    man.extra = {"counts": {str(k): v for k, v in res.counts.items()}}
    man.write(out)
    print(f"wrote {len(res.roots)} eigenvalues to {out / 'spectrum.csv'}")
    return EXIT_OK


def cmd_fit(args) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    full, cfg = None, None
    if args.config:
        try:
            cfg, full = load_config(args.config)
        except ConfigParseError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_PARSE
        full = _apply_overrides(full, args)
    man = RunManifest(command="fit", config=full or {}, quadrature_error=None, started=_now())
    qerr = math.nan
    if args.trace:
        t, E = _read_trace(Path(args.trace))
    elif cfg is not None:
        try:
            trace = _run_simulation(cfg, full, check=not args.force)
        except ConfigError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_VIOLATION
        man.add(_write_trace(out, trace))
        t, E, qerr = trace.t, trace.total, trace.quadrature_error
    else:
        print("error: need --trace or --config", file=sys.stderr)
        return EXIT_PARSE
    window = tuple(full["fit"]["window_time"]) if full else DEFAULT_WINDOW
    if args.window:
        window = tuple(args.window)
    tau = cfg.tau if cfg is not None else args.tau
    try:
        rep = fit_decay_exponent(t, E, window=window, tau=tau, quadrature_error=qerr)
    except InsufficientDecayError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    doc = rep.to_dict()
    k = trend = None
    if cfg is not None and cfg.profile.is_power and cfg.gamma < 1.0 and not args.no_spectrum:
        spc = full["spectrum"]
        try:
            res = compute_spectrum(cfg, (int(spc["k_min"]), int(spc["k_max"])))
            opt = optimality_report(res, rep)
            k, trend = opt.k, opt.trend
            doc["optimality"] = opt.to_dict()
        except CountMismatchError as exc:
            doc["optimality"] = {"flag": "count-mismatch", "text": str(exc)}
    man.quadrature_error = None if math.isnan(qerr) else qerr
    p = out / "report.json"
    p.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_json_default) + "\n", encoding="utf-8")
    man.add(p)
    if args.svg:
        p = out / "decay.svg"
        _svg_decay(p, t, E, rep, k, trend)
        man.add(p)
    man.write(out)
    print(f"s_fit = {rep.s_fit:.6f} (predicted {rep.predicted:.6f}), R^2 = {rep.r_squared:.6f}")
    return EXIT_OK


SWEEP_KEYS = {"tau", "alpha", "gamma", "n_cells", "beta", "rho", "omega_per_time"}


def _cell_doc(base: dict, params: dict) -> dict:
    doc = copy.deepcopy(base)
    for k, v in params.items():
        if k == "gamma":
            doc.setdefault("profile", {})["kind"] = "power"
            doc["profile"]["gamma"] = v
        elif k == "n_cells":
            doc.setdefault("simulation", {})["n_cells"] = v
        else:
            doc[k] = v
    return doc


def run_sweep_cell(base: dict, params: dict, out_dir: str) -> dict:
    """One sweep cell: simulate, fit, and the family-2 spectral trend level.

    Never raises; failures are reported in the ``status`` field.
    """
    row = {**params, "status": "ok", "s_fit": math.nan, "predicted": math.nan,
           "trend_level": math.nan, "r_squared": math.nan, "error": ""}
    try:
        cfg, full = config_from_dict(_cell_doc(base, params))
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        row["predicted"] = predicted_exponent(cfg.tau)
        trace = _run_simulation(cfg, full, check=True)
        _write_trace(out, trace)
        rep = fit_decay_exponent(trace, window=tuple(full["fit"]["window_time"]), tau=cfg.tau)
        row["s_fit"], row["r_squared"] = rep.s_fit, rep.r_squared
        if cfg.profile.is_power and cfg.gamma < 1.0:
            spc = full["spectrum"]
            res = compute_spectrum(cfg, (int(spc["k_min"]), int(spc["k_max"])), verify_counts=False)
            k, tr = res.trend(2)
            row["trend_level"] = float(np.mean(tr[k >= np.median(k)]))
    except Exception as exc:  # noqa: BLE001 - isolate cell failures
        row["status"] = "failed"
        row["error"] = f"{type(exc).__name__}: {exc}".replace("\n", " ")
    return row


def _parse_grid(text: str) -> dict:
    p = Path(text)
    try:
        doc = json.loads(p.read_text(encoding="utf-8")) if p.exists() else json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigParseError(f"grid is not JSON: {exc}") from exc
    if not isinstance(doc, dict) or not doc:
        raise ConfigParseError("grid must be a non-empty JSON object of lists")
    bad = set(doc) - SWEEP_KEYS
    if bad:
        raise ConfigParseError(f"unsupported grid keys: {sorted(bad)}")
    return {k: list(v) if isinstance(v, list) else [v] for k, v in doc.items()}


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("DEGENWAVE_THREADS", "0")) or (os.cpu_count() or 1))
    except ValueError:
        return 1


def cmd_sweep(args) -> int:
    try:
        with open(args.config, encoding="utf-8") as fh:
            base = json.load(fh)
        config_from_dict(base)
        grid = _parse_grid(args.grid)
    except (OSError, json.JSONDecodeError, ConfigParseError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    base = _apply_overrides(_merge(DEFAULTS, base), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    keys = sorted(grid)
    cells = [dict(zip(keys, combo)) for combo in itertools.product(*(grid[k] for k in keys))]
    dirs = [str(out / ("cell_%03d" % i)) for i in range(len(cells))]
    workers = min(_threads(), len(cells))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(run_sweep_cell, [base] * len(cells), cells, dirs))
    else:
        rows = [run_sweep_cell(base, c, d) for c, d in zip(cells, dirs)]
    man = RunManifest(command="sweep", config={"base": base, "grid": grid}, quadrature_error=None,
                      started=_now())
    header = ["cell"] + keys + ["status", "s_fit", "predicted", "r_squared", "trend_level", "error"]
    p = out / "sweep.csv"
    write_csv(p, header, [[i] + [r[k] for k in header[1:]] for i, r in enumerate(rows)])
    man.add(p)
    man.write(out)
    failed = sum(r["status"] != "ok" for r in rows)
    print(f"wrote {len(rows)} rows to {p} ({failed} failed)")
    return EXIT_OK if failed == 0 else EXIT_FAIL


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="degenwave", description=__doc__.split("\n")[0])
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, help="JSON configuration file")
        if out:
            p.add_argument("--out", default="out", help="output directory")

    p = sub.add_parser("check", help="validate a configuration and test condition (C)")
    common(p, out=False)
    p.set_defaults(func=cmd_check)

    p = sub.add_parser("simulate", help="time integration; writes energy.csv")
    common(p)
    p.add_argument("--n-cells", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--svg", action="store_true", help="also write energy.svg")
    p.add_argument("--force", action="store_true", help="run even if the check reports violations")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("spectrum", help="eigenvalues of both families; writes spectrum.csv, trend.csv")
    common(p)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("fit", help="decay exponent from a trace file or a fresh run")
    p.add_argument("--config", help="configuration (runs a simulation unless --trace is given)")
    p.add_argument("--trace", help="existing energy.csv")
    p.add_argument("--out", default="out")
    p.add_argument("--tau", type=float, help="order used for the prediction when only --trace is given")
    p.add_argument("--window", type=float, nargs=2, metavar=("T_A", "T_B"))
    p.add_argument("--n-cells", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.add_argument("--no-spectrum", action="store_true", help="skip the spectral trend")
    p.add_argument("--svg", action="store_true", help="also write decay.svg")
    p.add_argument("--force", action="store_true")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep", help="parameter grid of simulate+fit runs")
    common(p)
    p.add_argument("--grid", required=True, help='JSON object of lists, e.g. {"tau": [0.3, 0.5]}')
    p.add_argument("--n-cells", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--k-min", type=int)
    p.add_argument("--k-max", type=int)
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return int(args.func(args))


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
