"""Command-line entry points: inj, cutlocus, sweep, validate."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
import time
from pathlib import Path

import numpy as np

from . import __version__
from .config import ConfigError, RunConfig, build_family_field, \
    build_submanifold, parse_config, scenario as load_scenario
from .cutanalysis import warner_bound
from .geodesics import integrate_geodesic
from .geometry import GeometryError
from .stability import (Resolution, curvature_stats,
                        cut_time_continuity_probe,
                        focal_free_persistence_probe,
                        hausdorff_convergence_check, run_case,
                        sweep_embedding_family, sweep_metric_family)
from .submanifold import SubmanifoldSpec
from .wavefront import eikonal_residual


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def _write_csv(path: Path, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


class _Emitter:
    """Collects output files and timings for the run manifest."""

    def __init__(self, cfg: RunConfig, out_dir: Path, command: str):
        self.cfg = cfg
        self.out = out_dir
        self.command = command
        self.t0 = time.perf_counter()
        self.timings: dict[str, float] = {}
        self.verdicts: dict = {}
        self.files: list[Path] = []
        out_dir.mkdir(parents=True, exist_ok=True)

    def csv(self, name: str, header, rows) -> None:
        p = self.out / name
        _write_csv(p, header, rows)
        self.files.append(p)

    def json(self, name: str, payload: dict) -> None:
        p = self.out / name
        p.write_text(json.dumps(payload, indent=2, sort_keys=True,
                                default=_json_default) + "\n")
        self.files.append(p)

    def manifest(self) -> None:
        inventory = {}
        for p in self.files:
            inventory[p.name] = hashlib.sha256(p.read_bytes()).hexdigest()
        payload = {
            "command": self.command,
            "config": {"scenario": self.cfg.scenario,
                       "backend": self.cfg.backend_spec,
                       "submanifold": self.cfg.submanifold_spec,
                       "resolution": self.cfg.resolution.as_dict(),
                       "family": self.cfg.family,
                       "seed": self.cfg.seed},
            "version": __version__,
            "wall_clock_s": time.perf_counter() - self.t0,
            "timings_s": self.timings,
            "verdicts": self.verdicts,
            "files": inventory,
        }
        (self.out / "manifest.json").write_text(
            json.dumps(payload, indent=2, sort_keys=True,
                       default=_json_default) + "\n")


def _json_default(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, np.bool_):
        return bool(x)
    raise TypeError(f"not JSON serializable: {type(x)}")


def _profile_rows(result):
    for p in result.profiles:
        loop_t = p.loop.t if p.loop is not None else float("inf")
        yield ([p.dir_idx, p.s, p.side, p.rho, p.focal_t, p.no_cut, loop_t]
               + list(p.cut_point))


def _coord_header(b):
    return ["x", "y"] if b.dim == 2 else ["x", "y", "z"]


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def cmd_inj(cfg: RunConfig, out: Path, threads: int) -> int:
    em = _Emitter(cfg, out, "inj")
    b = cfg.build_backend()
    N = cfg.build_submanifold(b)
    t0 = time.perf_counter()
    result = run_case(b, N, cfg.resolution, threads)
    em.timings["run_case"] = time.perf_counter() - t0
    em.json("inj.json", {"inj_direct": result.inj_direct,
                         "inj_char": result.inj_char,
                         "branch": result.branch,
                         "f_min": result.fmin,
                         "l_half": result.l_half,
                         "err": result.err})
    em.csv("profiles.csv",
           ["dir_idx", "s", "side", "rho", "focal_t", "no_cut", "loop_t"]
           + [f"cut_{c}" for c in _coord_header(b)],
           _profile_rows(result))
    em.verdicts["inj_estimators_agree"] = \
        abs(result.inj_direct - result.inj_char) <= 5e-3
    em.manifest()
    if not em.verdicts["inj_estimators_agree"]:
        print("FAIL: verdict inj_estimators_agree", file=sys.stderr)
        return 1
    return 0


def cmd_cutlocus(cfg: RunConfig, out: Path, threads: int) -> int:
    em = _Emitter(cfg, out, "cutlocus")
    b = cfg.build_backend()
    N = cfg.build_submanifold(b)
    t0 = time.perf_counter()
    result = run_case(b, N, cfg.resolution, threads)
    em.timings["run_case"] = time.perf_counter() - t0
    ch = _coord_header(b)
    em.csv("cut_cloud.csv", ch + ["dir_idx"],
           ([*p, d] for p, d in zip(result.cloud.points, result.cloud.dir_idx)))
    em.csv("sep_points.csv", ch + ["multiplicity", "flag"],
           ([*sp.point, sp.multiplicity, sp.flag] for sp in result.sep))
    flags = sorted({sp.flag for sp in result.sep})
    covered = set()
    for sp in result.sep:
        covered.update(sp.dir_idx)
    em.json("cutlocus.json", {
        "n_cloud": len(result.cloud.points),
        "dichotomy_flags": flags,
        "n_sep_clusters": len(result.sep),
        "all_cut_dirs_in_clusters":
            covered >= set(int(d) for d in result.cloud.dir_idx),
    })
    em.verdicts["nonempty_cloud"] = len(result.cloud.points) > 0
    em.manifest()
    if not em.verdicts["nonempty_cloud"]:
        print("FAIL: verdict nonempty_cloud", file=sys.stderr)
        return 1
    return 0


def cmd_sweep(cfg: RunConfig, out: Path, threads: int) -> int:
    if cfg.family is None:
        raise ConfigError("family: required for sweep (family.tau ladder)")
    em = _Emitter(cfg, out, "sweep")
    b = cfg.build_backend()
    N = cfg.build_submanifold(b)
    taus = cfg.family["tau"]
    kind = cfg.family.get("kind")
    t0 = time.perf_counter()
    if kind == "conformal":
        phi = build_family_field(cfg, b)
        table = sweep_metric_family(b, N, taus, cfg.resolution, phi=phi,
                                    threads=threads)
    elif kind == "blend":
        mspec = dict(cfg.family.get("metric", {}))
        b1 = cfg.build_backend() if not mspec else _blend_target(cfg, mspec)
        table = sweep_metric_family(b, N, taus, cfg.resolution, b1=b1,
                                    threads=threads)
    elif kind == "embedding":
        tspec = dict(cfg.family.get("target", {}))
        N1 = build_submanifold(b, {"dim": 1, "curve": tspec, "m_N": N.m_N})
        table = sweep_embedding_family(b, N, N1, taus, cfg.resolution,
                                       threads=threads)
    else:
        raise ConfigError(f"family.kind: unknown kind {kind!r}")
    em.timings["sweep"] = time.perf_counter() - t0
    probe_rho = cut_time_continuity_probe(table)
    probe_focal = focal_free_persistence_probe(table)
    probe_dh = hausdorff_convergence_check(table)

    cols = ["tau", "inj_direct", "inj_char", "branch", "f_min", "l_half",
            "inj_dev", "d_H", "d_H_tau_to_0", "d_H_0_to_tau", "rho_dev_max",
            "rho_dev_mean", "focal_margin", "err", "m", "dt", "tol"]
    em.csv("sweep.csv", cols,
           ([r.get(c, "") for c in cols] for r in table.records))
    em.json("sweep.json", {"description": table.description,
                           "taus": table.taus,
                           "resolution": table.resolution,
                           "base": table.base,
                           "records": table.records,
                           "verdicts": table.verdicts,
                           "cut_time_probe": probe_rho,
                           "focal_free_probe": probe_focal,
                           "hausdorff_check": probe_dh})
    em.verdicts["sweep"] = bool(table.verdicts.get("pass"))
    em.verdicts["cut_time_probe"] = bool(probe_rho.get("verdict"))
    fv = probe_focal.get("verdict")
    em.verdicts["focal_free_probe"] = True if isinstance(fv, str) else bool(fv)
    em.verdicts["hausdorff_check"] = bool(probe_dh.get("verdict"))
    em.manifest()
    bad = [k for k, v in em.verdicts.items() if not v]
    if bad:
        print(f"FAIL: verdict {bad[0]}", file=sys.stderr)
        return 1
    return 0


def _blend_target(cfg, mspec):
    spec = dict(cfg.backend_spec)
    spec["metric"] = mspec
    return parse_config({"backend": spec,
                         "submanifold": cfg.submanifold_spec}).build_backend()


def cmd_validate(cfg: RunConfig, out: Path, threads: int) -> int:
    em = _Emitter(cfg, out, "validate")
    b = cfg.build_backend()
    N = cfg.build_submanifold(b)
    t0 = time.perf_counter()
    result = run_case(b, N, cfg.resolution, threads, keep_atlas=True)
    em.timings["run_case"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    spacing = 0.05 if b.dim == 2 else 0.1
    eik = eikonal_residual(result.atlas, spacing,
                           cut_points=result.cloud.points)
    em.timings["eikonal"] = time.perf_counter() - t0
    residuals = eik.pop("residuals", None)
    if residuals is not None:
        em.csv("eikonal_residuals.csv", ["residual"],
               ([float(r)] for r in residuals))

    # integrator refinement: RK4 endpoint error should shrink ~16x per halving
    frame = result.atlas.frames[0]
    t_ref = min(0.5, cfg.resolution.t_max)
    ends = {}
    for dt in (cfg.resolution.dt * 4, cfg.resolution.dt * 2, cfg.resolution.dt):
        path = integrate_geodesic(b, frame.base, frame.n, t_ref, dt)
        ends[dt] = path.endpoint()
    e_coarse = float(np.linalg.norm(ends[cfg.resolution.dt * 4]
                                    - ends[cfg.resolution.dt]))
    e_fine = float(np.linalg.norm(ends[cfg.resolution.dt * 2]
                                  - ends[cfg.resolution.dt]))
    ratio = e_coarse / e_fine if e_fine > 1e-15 else float("inf")
    refinement = {"endpoint_err_coarse": e_coarse,
                  "endpoint_err_fine": e_fine, "ratio": ratio}

    stats = curvature_stats(b, N)
    warner = {"K_max": stats["K_max"], "K_min": stats["K_min"],
              "Delta": stats["Delta"], "f_min": result.fmin}
    if stats["K_max"] > 0.0:
        wb = warner_bound(stats["K_max"], stats["Delta"])
        warner.update(wb)
        warner["f_min_ge_eps_std"] = result.fmin >= wb["eps_std"] - 1e-3
        warner["eps_paper_minus_eps_std"] = wb["eps_paper"] - wb["eps_std"]
    em.json("validate.json", {"eikonal": eik, "refinement": refinement,
                              "warner": warner})
    em.verdicts["eikonal_95pct"] = eik["frac_below_1e2"] >= 0.95
    em.verdicts["warner_lower_bound"] = warner.get("f_min_ge_eps_std", True)
    em.manifest()
    bad = [k for k, v in em.verdicts.items() if not v]
    if bad:
        print(f"FAIL: verdict {bad[0]}", file=sys.stderr)
        return 1
    return 0


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="cutlab",
        description="cut loci, focal points and injectivity radii on "
                    "compact surfaces, with stability sweeps")
    sub = ap.add_subparsers(dest="command", required=True)
    for name, help_ in (("inj", "injectivity radius, both estimators"),
                        ("cutlocus", "cut-locus cloud and separating set"),
                        ("sweep", "convergence sweep over a family"),
                        ("validate", "eikonal, integrator and bound checks")):
        p = sub.add_parser(name, help=help_)
        p.add_argument("--config", type=str, help="JSON config path")
        p.add_argument("--scenario", type=str, help="bundled scenario name")
        p.add_argument("--out", type=str, default="out",
                       help="output directory")
        p.add_argument("--threads", type=int, default=None)
    return ap


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = parse_config(args.config)
            if args.scenario and cfg.scenario not in (None, args.scenario):
                raise ConfigError("scenario: --scenario conflicts with config")
        elif args.scenario:
            cfg = load_scenario(args.scenario)
        else:
            raise ConfigError("config: give --config or --scenario")
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 2
    threads = args.threads
    if threads is None:
        threads = cfg.threads
    if threads is None:
        threads = int(os.environ.get("CUTLAB_THREADS", "1"))
    out = Path(args.out if args.out else (cfg.out or "out"))
    handler = {"inj": cmd_inj, "cutlocus": cmd_cutlocus,
               "sweep": cmd_sweep, "validate": cmd_validate}[args.command]
    try:
        return handler(cfg, out, threads)
    except ConfigError as ex:
        print(f"config error: {ex}", file=sys.stderr)
        return 2
    except GeometryError as ex:
        print(f"FAIL: {ex}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main(argv=None))
