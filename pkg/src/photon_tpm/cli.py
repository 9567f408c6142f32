"""Command-line front end.

Subcommands: ``exact``, ``simulate``, ``sweep`` (alias ``plot-data``),
``verify`` and ``trace``. Exit codes: 0 success, 1 invalid configuration,
2 invariant failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import channel as chmod
from . import clicks, interferometer, qmath, tpm
from .channel import FtadParams
from .tpm import SourceParams

EXIT_OK, EXIT_CONFIG, EXIT_INVARIANT = 0, 1, 2
SEED_ENV = "PHOTON_TPM_SEED"
DEFAULTS = {
    "delta": 0.77,
    "p": 0.19,
    "eta": 0.7,
    "counts": 10_000,
    "seed": 0,
    "eta_start": 0.0,
    "eta_stop": 1.0,
    "eta_steps": 21,
    "format": "csv",
    "noise_model": clicks.NoiseModel.POISSON_PER_OUTCOME.value,
    "grid_steps": 11,
}
SUMMARY_COLUMNS = (
    "eta",
    "avg_sigma",
    "avg_sigma_err",
    "avg_sigma_theory",
    "ft_value",
    "ft_err",
    "ft_theory",
    "fidelity",
    "p_final_0_est",
    "p_final_1_est",
    "p_final_0_theory",
    "p_final_1_theory",
)


class ConfigError(ValueError):
    pass


def _num(x) -> str:
    return format(x, ".17g") if isinstance(x, float) else str(x)


def write_atomic(path: Path, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(main_text: str, output: str | None, extra: dict | None = None) -> None:
    """Write ``main_text`` to ``output`` (stdout if None) and sidecar files next to it."""
    if output is None:
        sys.stdout.write(main_text)
        for text in (extra or {}).values():
            sys.stderr.write(text)
        return
    out = Path(output)
    write_atomic(out, main_text)
    for suffix, text in (extra or {}).items():
        write_atomic(out.with_name(f"{out.stem}_{suffix}{out.suffix}"), text)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_num(x) for x in row])
    return buf.getvalue()


# --------------------------------------------------------------------------- config


def _load_config(args) -> dict:
    cfg = {}
    if getattr(args, "config", None):
        try:
            cfg = json.loads(Path(args.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config file: {exc}") from exc
        if not isinstance(cfg, dict):
            raise ConfigError("config file must hold a JSON object")
        extra = {"phi", "theta", "output", "a", "b", "mask", "workers", "tol", "channel_file", "subnormalized"}
        unknown = set(cfg) - set(DEFAULTS) - extra
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    if SEED_ENV in os.environ and "seed" not in cfg:
        try:
            cfg["seed"] = int(os.environ[SEED_ENV])
        except ValueError as exc:
            raise ConfigError(f"{SEED_ENV} must be an integer") from exc
    for key, val in vars(args).items():
        if val is not None and key not in ("func", "command", "config"):
            cfg[key] = val
    return cfg


def resolve_params(cfg: dict) -> tuple:
    """(SourceParams, FtadParams) from channel or angle parameterization."""
    p, eta, phi, theta = (cfg.get(k) for k in ("p", "eta", "phi", "theta"))
    if phi is not None:
        p_phi = math.sin(phi) ** 2
        if p is not None and abs(p - p_phi) > 1e-12:
            raise ConfigError(f"--p {p} conflicts with --phi {phi} (sin^2 phi = {p_phi})")
        p = p_phi
    if theta is not None:
        eta_theta = math.cos(theta) ** 2
        if eta is not None and abs(eta - eta_theta) > 1e-12:
            raise ConfigError(f"--eta {eta} conflicts with --theta {theta} (cos^2 theta = {eta_theta})")
        eta = eta_theta
    p = DEFAULTS["p"] if p is None else p
    eta = DEFAULTS["eta"] if eta is None else eta
    delta = cfg.get("delta", DEFAULTS["delta"])
    try:
        return SourceParams(delta), FtadParams(p, eta)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _get(cfg, key):
    return cfg.get(key, DEFAULTS.get(key))


def _run_config(cfg: dict, src, ch) -> clicks.RunConfig:
    try:
        return clicks.RunConfig(
            src,
            ch,
            counts_per_setting=int(_get(cfg, "counts")),
            seed=int(_get(cfg, "seed")),
            noise_model=clicks.NoiseModel(_get(cfg, "noise_model")),
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _eta_grid(cfg) -> np.ndarray:
    start, stop, steps = float(_get(cfg, "eta_start")), float(_get(cfg, "eta_stop")), int(_get(cfg, "eta_steps"))
    if steps < 1 or not (0.0 <= start <= 1.0 and 0.0 <= stop <= 1.0):
        raise ConfigError("eta grid must have >= 1 step and lie inside [0, 1]")
    return np.linspace(start, stop, steps)


# --------------------------------------------------------------------------- commands


def cmd_exact(cfg: dict) -> int:
    src, ch = resolve_params(cfg)
    report = tpm.exact_report(src, ch)
    if _get(cfg, "format") == "json":
        _emit(json.dumps(report, indent=2) + "\n", cfg.get("output"))
        return EXIT_OK
    dist = tpm.joint_distribution(src, ch)
    records = tpm.entropy_production(dist)
    ec = report["entropy_change"]
    summary = _csv(
        ("key", "value"),
        [
            ("delta", src.delta),
            ("p", ch.p),
            ("eta", ch.eta),
            ("p_initial_0", float(dist.p_initial[0])),
            ("p_initial_1", float(dist.p_initial[1])),
            ("p_final_0", float(dist.p_final[0])),
            ("p_final_1", float(dist.p_final[1])),
            ("avg_sigma", report["avg_sigma"] if report["avg_sigma"] is not None else "undefined"),
            ("ft_value", report["ft_value"] if report["ft_value"] is not None else "undefined"),
            ("entropy_change_trajectory", ec["trajectory_average"]),
            ("entropy_change_von_neumann", ec["von_neumann"]),
        ],
    )
    _emit(tpm.records_to_csv(records), cfg.get("output"), {"summary": summary})
    return EXIT_OK


def _summary_row(rep: clicks.EstimateReport, src, p) -> list:
    g = tpm.grid_functionals(src.delta, p, rep.eta) if 0 < src.delta < 1 and 0 < p < 1 else None
    return [
        rep.eta,
        rep.avg_sigma[0],
        rep.avg_sigma[1],
        float(g["avg_sigma"]) if g is not None else "undefined",
        rep.ft_value[0],
        rep.ft_value[1],
        float(g["ft"]) if g is not None else "undefined",
        rep.fidelity,
        rep.p_final[0],
        rep.p_final[1],
        rep.p_final_theory[0],
        rep.p_final_theory[1],
    ]


def _write_reports(cfg, reports, src, ch) -> None:
    if _get(cfg, "format") == "json":
        doc = {
            "delta": src.delta,
            "p": ch.p,
            "counts_per_setting": int(_get(cfg, "counts")),
            "seed": int(_get(cfg, "seed")),
            "reports": [r.to_dict() for r in reports],
        }
        _emit(json.dumps(doc, indent=2) + "\n", cfg.get("output"))
        return
    summary = _csv(SUMMARY_COLUMNS, [_summary_row(r, src, ch.p) for r in reports])
    _emit(clicks.reports_to_csv(reports), cfg.get("output"), {"summary": summary})


def cmd_simulate(cfg: dict) -> int:
    src, ch = resolve_params(cfg)
    rc = _run_config(cfg, src, ch)
    _write_reports(cfg, [clicks.run(rc)], src, ch)
    return EXIT_OK


def cmd_sweep(cfg: dict) -> int:
    src, ch = resolve_params(cfg)
    rc = _run_config(cfg, src, ch)
    reports = clicks.sweep(rc, _eta_grid(cfg), max_workers=cfg.get("workers"))
    _write_reports(cfg, reports, src, ch)
    return EXIT_OK


class _Checks:
    def __init__(self, tol: float, out=None):
        self.tol, self.failed, self.out = tol, False, out or sys.stdout

    def check(self, name: str, residual: float, tol: float | None = None) -> None:
        tol = self.tol if tol is None else tol
        ok = residual <= tol
        self.failed |= not ok
        print(f"{'PASS' if ok else 'FAIL'}  {name:<48s} max residual {residual:.3e} (tol {tol:.0e})", file=self.out)

    def note(self, text: str) -> None:
        print(f"NOTE  {text}", file=self.out)


def cmd_verify(cfg: dict) -> int:
    tol = float(cfg.get("tol") or 1e-10)
    checks = _Checks(tol)
    if cfg.get("channel_file"):
        try:
            ch_file = chmod.KrausChannel.from_json(Path(cfg["channel_file"]).read_text())
        except (OSError, ValueError, KeyError, TypeError) as exc:
            raise ConfigError(f"cannot read channel file: {exc}") from exc
        checks.check("channel file: Kraus completeness", ch_file.completeness_residual())
        if ch_file.params is not None:
            ref = chmod.build_ftad(ch_file.params)
            checks.check("channel file: matches FTAD operators", chmod.kraus_residual(ch_file, ref))
        return EXIT_INVARIANT if checks.failed else EXIT_OK

    steps = int(_get(cfg, "grid_steps"))
    grid = np.linspace(0.0, 1.0, steps)
    rng = np.random.default_rng(int(_get(cfg, "seed")))
    res = {k: 0.0 for k in ("complete", "dil_sign", "dil_choi", "unitary", "excite", "path", "final", "fixed", "flux", "reverse")}
    raw_dilation = 0.0
    skipped = 0
    inputs = [qmath.random_pure_state(rng) for _ in range(5)]
    n_tot = qmath.tensor(qmath.N1, qmath.I2) + qmath.tensor(qmath.I2, qmath.N1)
    for p in grid:
        for eta in grid:
            par = FtadParams(p, eta)
            ch = chmod.build_ftad(par)
            res["complete"] = max(res["complete"], ch.completeness_residual())
            dil = chmod.build_dilation(par)
            ext = chmod.kraus_from_dilation(dil)
            raw_dilation = max(raw_dilation, chmod.kraus_residual(ext, ch))
            res["dil_sign"] = max(res["dil_sign"], chmod.kraus_residual_up_to_sign(ext, ch))
            res["dil_choi"] = max(res["dil_choi"], float(np.max(np.abs(chmod.choi_matrix(ext) - chmod.choi_matrix(ch)))))
            u = dil.matrix
            res["unitary"] = max(res["unitary"], float(np.max(np.abs(u @ u.conj().T - np.eye(4)))))
            res["excite"] = max(res["excite"], float(np.max(np.abs(qmath.commutator(u, n_tot)))))
            th = chmod.thermal_state(p)
            res["fixed"] = max(res["fixed"], float(np.max(np.abs(chmod.apply(ch, th) - th))))
            for path, j in interferometer.PATH_TO_KRAUS.items():
                m = qmath.X @ interferometer.effective_operator(par, path)
                res["path"] = max(res["path"], float(np.max(np.abs(interferometer.PATH_SIGN[path] * m - ch[j]))))
            for psi in inputs:
                lhs = interferometer.final_state(psi, par)
                rhs = qmath.X @ chmod.apply(ch, psi.density_matrix()) @ qmath.X
                res["final"] = max(res["final"], float(np.max(np.abs(lhs - rhs))))
            flux = chmod.entropy_flux(par, check=False)
            if not flux.finite:
                skipped += 1
                continue
            res["flux"] = max(res["flux"], chmod.reversal_residual(ch, flux))
            res["reverse"] = max(res["reverse"], chmod.reversed_channel(ch, flux).completeness_residual())

    checks.check("Kraus completeness", res["complete"])
    checks.check("dilation reproduces Kraus operators (up to sign)", res["dil_sign"])
    checks.check("dilation reproduces channel (Choi matrix)", res["dil_choi"])
    checks.note(f"dilation entrywise Kraus residual {raw_dilation:.3e} (E2 carries the opposite sign)")
    checks.check("dilation unitary", res["unitary"])
    checks.check("dilation conserves excitation number", res["excite"])
    checks.check("thermal state is stationary", res["fixed"])
    checks.check("path effective operator = +-X E_j", res["path"])
    checks.check("interferometer output = X Lambda[rho] X", res["final"])
    checks.check("time-reversal identity sum e^-Phi E E^dag = I", res["flux"])
    checks.check("reversed channel completeness", res["reverse"])
    if skipped:
        checks.note(f"{skipped} grid points with p in {{0, 1}}: flux infinite, fluctuation-theorem checks skipped")

    interior = grid[(grid > 0) & (grid < 1)]
    if interior.size:
        d, pp, ee = np.meshgrid(interior, interior, grid, indexing="ij")
        g = tpm.grid_functionals(d, pp, ee)
        checks.check("integral fluctuation theorem <e^-sigma> = 1", float(np.max(np.abs(g["ft"] - 1.0))))
        checks.check("second law <sigma> >= 0", float(max(0.0, -np.min(g["avg_sigma"]))))
        checks.check(
            "entropy decomposition",
            float(np.max(np.abs(g["avg_sigma"] - g["delta_s"] - g["flux_term"]))),
        )
        dist = tpm.joint_probs(d, pp, ee)
        checks.check("normalization sum P = 1", float(np.max(np.abs(dist.sum(axis=(-3, -2, -1)) - 1.0))))
        mask = np.ones((2, 2, 4), bool)
        for o in tpm.SUPPORT:
            mask[o.index] = False
        checks.check("excitation-violating trajectories vanish", float(np.max(dist[..., mask])), tol=0.0)
    return EXIT_INVARIANT if checks.failed else EXIT_OK


def _parse_complex(text: str) -> complex:
    try:
        return complex(str(text).replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"not a complex number: {text!r}") from exc


def cmd_trace(cfg: dict) -> int:
    _, ch = resolve_params(cfg)
    a, b = _parse_complex(cfg.get("a", "1")), _parse_complex(cfg.get("b", "0"))
    try:
        psi = qmath.PureState.qubit(a, b, subnormalized=bool(cfg.get("subnormalized")))
        mask = interferometer.BlockMask.parse(cfg.get("mask", "all"))
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    dump = interferometer.trace_dump(psi, ch, mask)
    doc = {"a": [a.real, a.imag], "b": [b.real, b.imag], "p": ch.p, "eta": ch.eta, "stages": dump}
    _emit(json.dumps(doc, indent=2) + "\n", cfg.get("output"))
    return EXIT_OK


# --------------------------------------------------------------------------- parser


def _add_params(sp: argparse.ArgumentParser) -> None:
    g = sp.add_argument_group("parameters")
    g.add_argument("--delta", type=float, help="occupation of the source's reduced state")
    g.add_argument("--p", type=float, help="thermal occupation of the channel")
    g.add_argument("--eta", type=float, help="coupling strength")
    g.add_argument("--phi", type=float, help="PBS1 plate angle (radians), p = sin^2 phi")
    g.add_argument("--theta", type=float, help="coupling plate angle (radians), eta = cos^2 theta")
    sp.add_argument("--config", help="JSON file with the same fields as the flags")
    sp.add_argument("--output", "-o", help="output file (default: stdout)")


def _add_run(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--counts", type=int, help="coincidence budget N (default 10000)")
    sp.add_argument("--seed", type=int, help=f"RNG seed (default ${SEED_ENV} or 0)")
    sp.add_argument("--noise-model", dest="noise_model", choices=[m.value for m in clicks.NoiseModel])
    sp.add_argument("--format", choices=("csv", "json"))


class _Parser(argparse.ArgumentParser):
    # usage errors are configuration errors; exit status 2 is reserved for invariant failures
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="photon-tpm", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    sp = sub.add_parser("exact", help="exact TPM table, <sigma> and <exp(-sigma)>")
    _add_params(sp)
    sp.add_argument("--format", choices=("csv", "json"))
    sp.set_defaults(func=cmd_exact)

    sp = sub.add_parser("simulate", help="one simulated counting experiment")
    _add_params(sp)
    _add_run(sp)
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("sweep", aliases=["plot-data"], help="simulated experiments over an eta grid")
    _add_params(sp)
    _add_run(sp)
    sp.add_argument("--eta-start", dest="eta_start", type=float)
    sp.add_argument("--eta-stop", dest="eta_stop", type=float)
    sp.add_argument("--eta-steps", dest="eta_steps", type=int)
    sp.add_argument("--workers", type=int, help="threads for the sweep points")
    sp.set_defaults(func=cmd_sweep)

    sp = sub.add_parser("verify", help="run the invariant checks")
    sp.add_argument("--config", help="JSON config file")
    sp.add_argument("--grid-steps", dest="grid_steps", type=int, help="points per axis on [0, 1] (default 11)")
    sp.add_argument("--tol", type=float, help="residual tolerance (default 1e-10)")
    sp.add_argument("--seed", type=int)
    sp.add_argument("--channel-file", dest="channel_file", help="check a serialized channel instead of the grid")
    sp.set_defaults(func=cmd_verify)

    sp = sub.add_parser("trace", help="per-stage amplitudes through the interferometer")
    _add_params(sp)
    sp.add_argument("--a", help="amplitude of |0>, e.g. 0.6 or 0.6+0.8j")
    sp.add_argument("--b", help="amplitude of |1>")
    sp.add_argument("--mask", help='open paths, e.g. "l_i:l_f,s_i:s_f" (default all)')
    sp.add_argument("--subnormalized", action="store_true", default=None)
    sp.set_defaults(func=cmd_trace)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_config(args)
        return args.func(cfg)
    except ValueError as exc:
        print(f"photon-tpm: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
