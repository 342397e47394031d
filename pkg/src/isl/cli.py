"""Command-line driver: ``isl <mode> --config FILE [--seed N] [--tol X] [--out DIR]``.

Exit codes: 0 every check passed, 1 a check failed, 2 some result was
indeterminate (and none failed), 3 configuration error, 4 numerical or
geometric failure, 5 unexpected error.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import os
import sys
import warnings
from pathlib import Path

import numpy as np

from . import config as cfgmod
from . import garnier, lauricella, pvi, schlesinger, surveys
from .errors import ConfigError, IslError
from .fuchsian import FuchsianFamily, is_irreducible, local_trace_defects, monodromy, random_family

log = logging.getLogger("isl")

EXIT_OK, EXIT_VIOLATION, EXIT_INDETERMINATE = 0, 1, 2
EXIT_CONFIG, EXIT_NUMERIC, EXIT_INTERNAL = 3, 4, 5
LOG_LEVELS = {"error": logging.ERROR, "info": logging.INFO, "debug": logging.DEBUG}


def setup_logging() -> None:
    level_name = os.environ.get("ISL_LOG", "error").lower()
    level = LOG_LEVELS.get(level_name)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("isl %(levelname)s: %(message)s"))
    log.handlers[:] = [handler]
    log.propagate = False
    log.setLevel(level if level is not None else logging.ERROR)
    if level is None:
        log.error("ISL_LOG=%r not recognised (use error, info or debug); using error", level_name)


def jsonable(x):
    if isinstance(x, dict):
        return {str(k): jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return [jsonable(v) for v in x.tolist()]
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (complex, np.complexfloating)):
        return [jsonable(float(x.real)), jsonable(float(x.imag))]
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, schlesinger.PoleEvent):
        return jsonable(x.to_dict())
    return x


class Report:
    def __init__(self, mode: str, cfg: cfgmod.ExperimentConfig):
        self.mode = mode
        self.cfg = cfg
        self.checks = []
        self.events = []
        self.sections = {}
        self.trace_writer = None

    def check(self, name: str, value, threshold=None, passed=None, indeterminate: bool = False, **extra) -> None:
        """Record a check; with a threshold, ``passed`` defaults to ``value < threshold``.

        ``indeterminate`` forces ``pass = None`` whatever the value.
        """
        if indeterminate:
            passed = None
        elif passed is None and threshold is not None and value is not None and not _nan(value):
            passed = bool(value < threshold)
        rec = {"name": name, "value": value, "pass": passed}
        if threshold is not None:
            rec["threshold"] = threshold
        rec.update(extra)
        self.checks.append(rec)
        log.info("%s: value=%s pass=%s", name, value, passed)

    def exit_code(self) -> int:
        verdicts = [c["pass"] for c in self.checks]
        if any(v is False for v in verdicts):
            return EXIT_VIOLATION
        if any(v is None for v in verdicts):
            return EXIT_INDETERMINATE
        return EXIT_OK

    def to_dict(self) -> dict:
        return {
            "schema": "isl-report/1",
            "mode": self.mode,
            "n": self.cfg.n,
            "seed": self.cfg.seed,
            "tolerances": {"integrator": self.cfg.tol, **self.cfg.thresholds},
            "checks": self.checks,
            "events": self.events,
            "sections": self.sections,
            "exit_code": self.exit_code(),
        }


def _nan(v) -> bool:
    return isinstance(v, float) and math.isnan(v)


def write_json(path: Path, obj) -> None:
    with open(path, "w") as fh:
        json.dump(jsonable(obj), fh, indent=2, sort_keys=True)
        fh.write("\n")


# --- building blocks ----------------------------------------------------------------


def build_family(cfg: cfgmod.ExperimentConfig, rng) -> FuchsianFamily:
    if cfg.points is not None:
        try:
            return FuchsianFamily(cfg.points, cfg.residues)
        except ValueError as exc:
            raise ConfigError(f"family: {exc}", "family") from exc
    return random_family(cfg.n, rng, **cfg.random_family)


def build_path(cfg, state, rng) -> schlesinger.DeformationPath:
    if "segments" in cfg.path:
        segs = [np.asarray(s, dtype=np.complex128) for s in cfg.path["segments"]]
    else:
        pieces = max(1, cfg.path["pieces"])
        segs = []
        for _ in range(pieces):
            d = surveys.random_direction(cfg.n, rng)
            segs.append(d * cfg.path["length"] / pieces)
    return schlesinger.DeformationPath(state.moving, tuple(segs))


def monodromy_checks(rep, family, report: Report, prefix: str = "") -> None:
    thr = report.cfg.thresholds
    defects = local_trace_defects(rep, family)
    for i, d in enumerate(defects):
        if math.isnan(d):
            report.check(f"{prefix}trace_defect[{i + 1}]", None, thr["trace_defect"], None, note="resonant: untestable")
        else:
            report.check(f"{prefix}trace_defect[{i + 1}]", float(d), thr["trace_defect"])
    report.check(
        f"{prefix}relation_residual",
        rep.relative_relation_residual,
        thr["relation_residual"],
        absolute=rep.relation_residual,
    )


def run_monodromy(cfg, report: Report, rng) -> None:
    # loops run 100x tighter than the flow tolerance, as in isomonodromy_check
    fam = build_family(cfg, rng)
    rep = monodromy(fam, tol=cfg.tol / 100)
    monodromy_checks(rep, fam, report)
    irr = is_irreducible(rep)
    report.sections["monodromy"] = {
        "basepoint": rep.basepoint,
        "order": list(rep.order),
        "generators": [g for g in rep.generators],
        "at_infinity": rep.at_infinity,
        "invariants": rep.invariants(),
        "irreducible": irr,
        "betas": fam.betas,
    }


def _deform(cfg, report: Report, rng):
    fam = build_family(cfg, rng)
    st = schlesinger.SchlesingerState.from_family(fam)
    path = build_path(cfg, st, rng)
    res = schlesinger.integrate_flow(st, path, cfg.tol)
    traj = res.trajectory
    thr = cfg.thresholds
    cons = schlesinger.conservation_report(traj)
    report.check("conservation.sum", cons.sum_deviation, thr["conservation"])
    report.check("conservation.beta", cons.beta_deviation, thr["conservation"])
    report.check("lemma1_residual", schlesinger.lemma1_residual(traj), thr["lemma1"])
    if len(traj) >= 2:
        iso = schlesinger.isomonodromy_check(traj, cfg.tol)
        extra = {"absolute": iso.drift, "noise_floor": iso.noise_floor}
        # cancellation in the traces can hide any drift below the threshold
        unreliable = iso.noise_floor > thr["isomonodromy_drift"]
        report.check(
            "isomonodromy_drift", iso.relative_drift, thr["isomonodromy_drift"], indeterminate=unreliable, **extra
        )
    report.sections["flow"] = {
        "completed": res.completed,
        "status": res.status,
        "states": len(traj),
        "path_length": path.length,
        "segments": list(path.segments),
    }
    if res.events:
        for v in schlesinger.theorem1_check(res.events, cfg.n):
            report.events.append({**v["event"].to_dict(), "bound": v["bound"], "pass": v["pass"]})
            report.check(f"theorem1[{v['event'].quantity}]", v["event"].order, passed=v["pass"], bound=v["bound"])
    binf = -traj.residues[0].sum(axis=0)[0, 0]
    if abs(2 * binf - 1) <= 1e-8:
        report.check("theta_inf_zero.b_drift", garnier.theta_inf_zero_b_constant(traj), thr["b_drift"])
    return fam, st, traj


def run_deform(cfg, report: Report, rng) -> None:
    _, _, traj = _deform(cfg, report, rng)
    report.trace_writer = traj.write_csv


def run_garnier(cfg, report: Report, rng) -> None:
    fam, st, traj = _deform(cfg, report, rng)
    gt = garnier.garnier_trace(traj)
    report.trace_writer = gt.write_csv
    worst = 0.0
    for k in range(len(traj)):
        if np.isnan(gt.u[k]).any():
            continue
        sig = garnier.elementary_symmetric(gt.u[k])
        worst = max(worst, float(np.abs(sig - gt.F[k]).max() / max(1.0, np.abs(gt.F[k]).max())))
    report.check("viete_roundtrip", worst, cfg.thresholds["roundtrip"])
    report.sections["garnier"] = {"theta": _theta_dict(garnier.ThetaParams.from_family(fam)), "flags": gt.flags}
    if cfg.n == 1:
        res = pvi.trajectory_residuals(traj)
        report.check("pvi_residual", float(res.max()), cfg.thresholds["pvi_residual"])


def _theta_dict(theta):
    return {"thetas": list(theta.thetas), "theta_inf": theta.theta_inf, "kappa": theta.kappa}


def run_slice_poles(cfg, report: Report, rng) -> None:
    fam = build_family(cfg, rng)
    st = schlesinger.SchlesingerState.from_family(fam)
    sl = cfg.slice
    if cfg.n == 1:
        recs, params = surveys.n1_pole_classes(st, rng, starts=sl["starts"], box=sl["box"])
        for r in recs:
            report.events.append({"quantity": "u", **r})
            report.check(f"pvi_pole[{len(report.events)}]", r["order"], passed=r["consistent"])
        report.sections["pvi_params"] = params.as_tuple()
        report.sections["crowded_events"] = sum(r["crowded"] for r in recs)
        report.check("poles_found", len(recs), passed=True)
        return
    sv = surveys.theorem2_survey(st, rng, n_slices=sl["count"], starts=sl["starts"], box=sl["box"])
    report.sections["irreducible"] = sv.irreducible
    if sv.irreducible is not True:
        report.check("irreducible_monodromy", sv.irreducible, passed=None if sv.irreducible is None else False)
    for v in sv.verdicts:
        rec = garnier.event_bound_record(v)
        report.events.append(rec)
        report.check(f"theorem2[{rec['quantity']}]", rec["order"], passed=v["pass"], bound=v["bound"])
    for v in sv.residue_verdicts:
        rec = {**v["event"].to_dict(), "bound": v["bound"], "pass": v["pass"]}
        report.events.append(rec)
        report.check(f"theorem1[{rec['quantity']}]", rec["order"], passed=v["pass"], bound=v["bound"])
    report.sections["slices_with_events"] = sv.n_slices
    # flagged only: a single slice through several nearby components certifies one of them
    report.sections["crowded_events"] = sum(bool(ev.extra.get("crowded")) for ev in sv.events)


def _riccati_theta(cfg) -> garnier.ThetaParams:
    thetas = cfg.theta["thetas"]
    ti = cfg.theta.get("theta_inf", sum(thetas) - 1)
    try:
        return lauricella.normalize_kappa_zero(garnier.ThetaParams(thetas, ti))
    except IslError as exc:
        raise ConfigError(f"theta: {exc}", "theta") from exc


def run_riccati(cfg, report: Report, rng) -> None:
    theta = _riccati_theta(cfg)
    report.sections["theta"] = _theta_dict(theta)
    if cfg.n == 1:
        params = pvi.params_from_theta(theta)
        worst = 0.0
        for _ in range(10):
            a = complex(*rng.uniform(-0.45, 0.45, 2))
            if abs(a) < 0.05:
                a += 0.1
            worst = max(worst, abs(pvi.pvi_residual(lambda t: lauricella.riccati_u(t, theta), a, params)))
        report.check("riccati_pvi_residual", worst, cfg.thresholds["pvi_residual"])
        return
    sl = cfg.slice
    if "origin" in sl:
        a0 = np.asarray(sl["origin"], dtype=np.complex128)
    else:
        s0 = rng.uniform(-0.4, 0.4, cfg.n) + 1j * rng.uniform(-0.4, 0.4, cfg.n)
        a0 = s0 / (s0 - 1)
    d = np.asarray(sl["direction"], dtype=np.complex128) if "direction" in sl else surveys.random_direction(cfg.n, rng)
    f_eval = lauricella.riccati_f(theta)
    p = lauricella.riccati_params(theta)

    def region(z):
        s = lauricella.s_of_a(a0 + z * d)
        return p.terminating_degree is not None or np.abs(s).max() <= lauricella.SERIES_RADIUS

    starts = [complex(*rng.uniform(-0.6, 0.6, 2)) for _ in range(sl["starts"])]
    zeros = lauricella.find_f_zeros(f_eval, a0, d, starts, region=region)
    verdicts = lauricella.prop1_check(a0, d, theta, f_eval, zeros=zeros)
    for v in verdicts:
        report.events.append(v.to_dict())
        report.check(f"prop1[{len(report.events)}]", list(v.F_orders), passed=v.passed)
    report.sections["slice"] = {"origin": a0, "direction": d, "zeros": len(zeros)}


def run_verify_all(cfg, report: Report, rng) -> None:
    run_monodromy(cfg, report, np.random.default_rng(cfg.seed))
    run_garnier(cfg, report, np.random.default_rng(cfg.seed))
    if cfg.theta is not None:
        run_riccati(cfg, report, np.random.default_rng(cfg.seed))


RUNNERS = {
    "monodromy": run_monodromy,
    "deform": run_deform,
    "garnier": run_garnier,
    "slice-poles": run_slice_poles,
    "riccati": run_riccati,
    "verify-all": run_verify_all,
}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="isl", description="Isomonodromic deformation experiments.")
    p.add_argument("mode", choices=cfgmod.MODES)
    p.add_argument("--config", required=True, help="JSON experiment configuration")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--tol", type=float, default=None, help="override the integrator tolerance")
    p.add_argument("--out", default=".", help="output directory (default: current)")
    return p


def run(cfg: cfgmod.ExperimentConfig, out: Path) -> int:
    report = Report(cfg.mode, cfg)
    rng = np.random.default_rng(cfg.seed)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        RUNNERS[cfg.mode](cfg, report, rng)
    out.mkdir(parents=True, exist_ok=True)
    write_json(out / "report.json", report.to_dict())
    write_json(out / "poles.json", report.events)
    if report.trace_writer is not None:
        report.trace_writer(out / "trace.csv")
    code = report.exit_code()
    log.info("exit code %d", code)
    return code


def main(argv=None) -> int:
    setup_logging()
    args = build_parser().parse_args(argv)
    try:
        cfg = cfgmod.load(args.config, args.mode, args.seed, args.tol)
    except ConfigError as exc:
        print(f"isl: config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run(cfg, Path(args.out))
    except ConfigError as exc:
        print(f"isl: config error [{exc.field}]: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (IslError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"isl: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except OSError as exc:
        print(f"isl: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    except Exception as exc:  # noqa: BLE001
        log.debug("unexpected failure", exc_info=True)
        print(f"isl: internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
