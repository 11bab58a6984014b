"""Command-line entry point: ``dcesim run|scan|compare|validate``.

Exit codes: 0 success, 2 validation failure, 3 numerical failure, 4 I/O failure.
"""
from __future__ import annotations

import argparse
import hashlib
import io
import json
import platform
import sys
import warnings
from importlib import metadata
from pathlib import Path

import numpy as np
import scipy

from . import _backend
from .config import ScenarioConfig, load_scenario
from .errors import ConfigError, InvalidArgument, NumericalFailure
from .integrator import IntegrationSettings, integrate
from .perturbative import closed_form_beta_matrix, dyson_transform, resonance_scan, write_scan_csv
from .scattering import scattering_transform
from .symplectic import BogoliubovTransform, identity_residuals

__all__ = ["main", "run_scenario", "scan_scenario", "compare_manifests"]

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL, EXIT_IO = 0, 2, 3, 4
FMT = "%.17e"


def _num(x: float) -> str:
    return FMT % x


def _versions() -> dict:
    try:
        own = metadata.version("dcesim")
    except metadata.PackageNotFoundError:
        own = "unknown"
    return {"dcesim": own, "numpy": np.__version__, "scipy": scipy.__version__, "python": platform.python_version()}


def _dump(path: Path, obj) -> str:
    text = json.dumps(obj, indent=2, sort_keys=True) + "\n"
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def _write_text(path: Path, text: str) -> str:
    path.write_text(text)
    return hashlib.sha256(text.encode()).hexdigest()


def _spectrum_csv(transform: BogoliubovTransform) -> str:
    out = io.StringIO()
    out.write("mode,mean_particles\n")
    for m, value in enumerate(transform.particle_numbers().mean_particles, start=1):
        out.write(f"{m},{_num(value)}\n")
    return out.getvalue()


# --- methods -------------------------------------------------------------------


def _run_method(name: str, cfg: ScenarioConfig) -> tuple[BogoliubovTransform, dict]:
    traj = cfg.trajectory()
    cavity = cfg.cavity()
    freqs = cfg.frequencies()
    if name == "dyson":
        res = dyson_transform(traj, cavity, freqs, cfg.quadrature)
        return res.transform, {"quadrature_error": res.quadrature_error, "max_speed": res.max_speed, "epsilon": res.epsilon}
    if name == "integrate":
        opts = cfg.integrator_options
        settings = IntegrationSettings(
            n_steps=opts["steps"], tol=float(opts["tol"]), method=opts["method"],
            recompute_couplings=opts["recompute_couplings"], backend=opts["backend"],
        )
        res = integrate(traj, cavity, settings, freqs, cfg.interior)
        return res.transform, {
            "steps": res.n_steps, "error_estimate": res.error_estimate,
            "method": res.method, "backend": res.backend,
        }
    if name == "scattering":
        return scattering_transform(traj, cavity, cfg.quadrature), {}
    if name == "closed-form":
        scen = cfg.oscillating_scenario()
        st = cfg.spacetime()
        beta = closed_form_beta_matrix(scen, st, cfg.n_modes, allow_limit=True)
        w = scen.omega0(np.arange(1, cfg.n_modes + 1), st)
        # the closed form gives beta only; alpha is reported at zeroth order
        alpha = np.diag(np.exp(1j * w * scen.T))
        return BogoliubovTransform(alpha, beta), {"alpha": "zeroth-order phases"}
    raise InvalidArgument(f"unknown method {name!r}")


def _scenario_record(cfg: ScenarioConfig) -> dict:
    # the output location is left out so that identical runs give identical manifests
    return {k: v for k, v in cfg.to_dict().items() if k != "output"}


def run_scenario(cfg: ScenarioConfig, out_dir: Path, stream=None) -> dict:
    """Evaluate every requested method and write all artifacts to ``out_dir``."""
    stream = stream or sys.stdout
    out_dir.mkdir(parents=True, exist_ok=True)
    results, files, transforms = {}, {}, {}
    interior = cfg.interior
    for name in cfg.methods:
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            transform, info = _run_method(name, cfg)
        r1, r2 = identity_residuals(transform, interior)
        transforms[name] = transform
        tfile, sfile = f"transform_{name}.json", f"spectrum_{name}.csv"
        files[tfile] = _dump(out_dir / tfile, transform.to_dict())
        files[sfile] = _write_text(out_dir / sfile, _spectrum_csv(transform))
        spectrum = transform.particle_numbers()
        results[name] = {
            "transform": tfile,
            "spectrum": sfile,
            "residuals": {"interior": interior or max(1, cfg.n_modes // 2), "r1": r1, "r2": r2},
            "total_particles": spectrum.total,
            "warnings": [str(w.message) for w in caught],
            **info,
        }
        print(f"{name}: total particles {_num(spectrum.total)}  residuals r1={r1:.3e} r2={r2:.3e}", file=stream)

    residual_lines = ["method,interior,r1,r2"]
    for name, res in results.items():
        rr = res["residuals"]
        residual_lines.append(f"{name},{rr['interior']},{_num(rr['r1'])},{_num(rr['r2'])}")
    files["residuals.csv"] = _write_text(out_dir / "residuals.csv", "\n".join(residual_lines) + "\n")

    comparisons = []
    names = list(transforms)
    for i, a in enumerate(names):
        for b in names[i + 1:]:
            d = _diff(transforms[a], transforms[b])
            comparisons.append({"a": a, "b": b, **d})
            print(f"max |beta_{a} - beta_{b}| = {d['beta_max']:.3e}  (relative {d['beta_relative']:.3e})", file=stream)

    manifest = {
        "command": "run",
        "scenario": _scenario_record(cfg),
        "source": Path(cfg.source).name,
        "versions": _versions(),
        "backend_default": _backend.DEFAULT,
        "results": results,
        "comparisons": comparisons,
        "files": files,
    }
    _dump(out_dir / "manifest.json", manifest)
    return manifest


def scan_scenario(cfg: ScenarioConfig, out_dir: Path, workers: int = 1, stream=None) -> dict:
    sc = cfg.scan_options
    if sc is None:
        raise ConfigError(["run.scan: the scan verb needs a run.scan block"])
    stream = stream or sys.stdout
    out_dir.mkdir(parents=True, exist_ok=True)
    grid = cfg.scan_grid()
    result = resonance_scan(
        cfg.oscillating_scenario(), cfg.spacetime(), grid, sc["m"], sc["n"],
        workers=workers, rel_height=float(sc["rel_height"]),
    )
    buf = io.StringIO()
    write_scan_csv(result.rows, buf)
    files = {"scan.csv": _write_text(out_dir / "scan.csv", buf.getvalue())}
    peaks = [result.rows[i].nu for i in result.peaks]
    curv = [result.rows[i].nu for i in result.curvature_peaks]
    print(f"scan of |beta_{sc['m']}{sc['n']}| over {len(grid)} frequencies", file=stream)
    print("peaks at nu = " + (", ".join(f"{v:.10g}" for v in peaks) or "none"), file=stream)
    if not cfg.spacetime().is_flat:
        print("curvature-term peaks at nu = " + (", ".join(f"{v:.10g}" for v in curv) or "none"), file=stream)
    manifest = {
        "command": "scan",
        "scenario": _scenario_record(cfg),
        "source": Path(cfg.source).name,
        "versions": _versions(),
        "grid_size": int(len(grid)),
        "peaks_nu": peaks,
        "curvature_peaks_nu": curv,
        "files": files,
    }
    _dump(out_dir / "manifest.json", manifest)
    return manifest


# --- compare ---------------------------------------------------------------------


def _diff(a: BogoliubovTransform, b: BogoliubovTransform) -> dict:
    if a.n_modes != b.n_modes:
        raise InvalidArgument(f"cannot compare transforms on {a.n_modes} and {b.n_modes} modes")
    da, db = a.alpha - b.alpha, a.beta - b.beta
    scale = max(float(np.abs(a.beta).max()), float(np.abs(b.beta).max()))
    na, nb = a.particle_numbers().mean_particles, b.particle_numbers().mean_particles
    with np.errstate(divide="ignore", invalid="ignore"):
        ratio = np.where(na > 0, nb / np.where(na > 0, na, 1.0), np.nan)
    return {
        "alpha_max": float(np.abs(da).max()),
        "alpha_frobenius": float(np.linalg.norm(da)),
        "beta_max": float(np.abs(db).max()),
        "beta_frobenius": float(np.linalg.norm(db)),
        "beta_relative": float(np.abs(db).max() / scale) if scale > 1e-150 else 0.0,
        "spectrum_max": float(np.abs(na - nb).max()),
        "spectrum_ratio": [None if np.isnan(r) else float(r) for r in ratio],
    }


def _load_manifest(path: Path) -> dict:
    manifest = json.loads(path.read_text())
    if "results" not in manifest:
        raise InvalidArgument(f"{path} is not a run manifest (no results)")
    return manifest


def _load_transform(manifest_path: Path, manifest: dict, method: str) -> BogoliubovTransform:
    if method not in manifest["results"]:
        raise InvalidArgument(f"{manifest_path} has no method {method!r} (has {', '.join(manifest['results'])})")
    tfile = manifest_path.parent / manifest["results"][method]["transform"]
    return BogoliubovTransform.from_json(tfile.read_text())


def compare_manifests(path_a, path_b, method_a=None, method_b=None) -> list[dict]:
    """Pair methods by name (or as given) and diff their transforms.

    ``spectrum_ratio`` is b over a, mode by mode, where a is nonzero.
    """
    path_a, path_b = Path(path_a), Path(path_b)
    ma, mb = _load_manifest(path_a), _load_manifest(path_b)
    if method_a or method_b:
        pairs = [(method_a or method_b, method_b or method_a)]
    else:
        common = [m for m in ma["results"] if m in mb["results"]]
        pairs = [(m, m) for m in common] or [(next(iter(ma["results"])), next(iter(mb["results"])))]
    report = []
    for a, b in pairs:
        ta = _load_transform(path_a, ma, a)
        tb = _load_transform(path_b, mb, b)
        report.append({"a": a, "b": b, **_diff(ta, tb)})
    return report


# --- entry point -----------------------------------------------------------------


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="dcesim", description="Particle creation by moving cavity walls.")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--workers", type=int, default=1, help="worker threads for scans")
    common.add_argument("--out-dir", type=Path, default=None, help="output directory (overrides the scenario)")
    common.add_argument("--tolerance", type=float, default=None, help="global quadrature/integrator tolerance")
    sub = p.add_subparsers(dest="verb", required=True)
    for verb, help_text in (("run", "evaluate the configured methods"), ("scan", "resonance scan of the closed form"),
                            ("validate", "check a scenario file")):
        sp = sub.add_parser(verb, parents=[common], help=help_text)
        sp.add_argument("config", type=Path)
    cp = sub.add_parser("compare", parents=[common], help="diff the transforms of two run manifests")
    cp.add_argument("manifest_a", type=Path)
    cp.add_argument("manifest_b", type=Path)
    cp.add_argument("--method-a", default=None)
    cp.add_argument("--method-b", default=None)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.workers < 1:
        print("error: --workers must be >= 1", file=sys.stderr)
        return EXIT_VALIDATION
    if args.tolerance is not None and not args.tolerance > 0:
        print("error: --tolerance must be positive", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        if args.verb == "compare":
            report = compare_manifests(args.manifest_a, args.manifest_b, args.method_a, args.method_b)
            text = json.dumps(report, indent=2, sort_keys=True)
            print(text)
            if args.out_dir is not None:
                args.out_dir.mkdir(parents=True, exist_ok=True)
                (args.out_dir / "compare.json").write_text(text + "\n")
            return EXIT_OK
        cfg = load_scenario(args.config, {"tolerance": args.tolerance, "directory": args.out_dir})
        if args.verb == "validate":
            print(f"{args.config}: ok ({', '.join(cfg.methods)}; trajectory {cfg.trajectory_kind})")
            return EXIT_OK
        out_dir = Path(cfg.data["output"]["directory"])
        if args.verb == "run":
            run_scenario(cfg, out_dir)
        else:
            scan_scenario(cfg, out_dir, workers=args.workers)
        return EXIT_OK
    except ConfigError as exc:
        where = getattr(args, "config", None)
        for v in exc.violations:
            print(f"{where}: {v}", file=sys.stderr)
        return EXIT_VALIDATION
    except InvalidArgument as exc:
        print(f"error ({getattr(args, 'config', '')}): {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure ({getattr(args, 'config', '')}): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, json.JSONDecodeError) as exc:
        print(f"I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
