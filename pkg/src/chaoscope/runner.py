"""Batch execution of experiment configs into CSV files plus a JSON manifest."""
from __future__ import annotations

import csv
import hashlib
import io
import json
import math
import os
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numba
import numpy as np
import scipy

from . import __version__
from . import dynsys, inflaton, spectral, ymh_classical, ymh_quantum
from .config import ExperimentConfig
from .errors import ChaoscopeError

__all__ = ["OutputFile", "RunManifest", "ExperimentFailed", "run", "emit_plot_data", "default_output_root"]

MANIFEST_NAME = "manifest.json"
ENV_OUT = "CHAOSCOPE_OUT"


class ExperimentFailed(ChaoscopeError):
    pass


@dataclass(frozen=True)
class OutputFile:
    path: str  # relative to the run directory
    role: str
    sha256: str
    size: int


@dataclass(frozen=True)
class RunManifest:
    config: dict
    config_text: str
    versions: dict
    wall_time: float
    outputs: tuple
    directory: Path

    @property
    def path(self) -> Path:
        return self.directory / MANIFEST_NAME

    def checksums(self) -> dict:
        return {o.path: o.sha256 for o in self.outputs}

    def to_json(self) -> str:
        doc = {
            "config": self.config,
            "config_text": self.config_text,
            "versions": self.versions,
            "wall_time": self.wall_time,
            "outputs": [vars(o) for o in self.outputs],
        }
        return json.dumps(doc, indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path) -> "RunManifest":
        path = Path(path)
        if path.is_dir():
            path = path / MANIFEST_NAME
        doc = json.loads(path.read_text())
        return cls(
            config=doc["config"],
            config_text=doc["config_text"],
            versions=doc["versions"],
            wall_time=doc["wall_time"],
            outputs=tuple(OutputFile(**o) for o in doc["outputs"]),
            directory=path.parent,
        )


def default_output_root() -> Path:
    return Path(os.environ.get(ENV_OUT, "chaoscope-out"))


def versions() -> dict:
    return {
        "chaoscope": __version__,
        "numpy": np.__version__,
        "scipy": scipy.__version__,
        "numba": numba.__version__,
        "python": platform.python_version(),
    }


# ---------------------------------------------------------------- formatting


def _csv(header, rows) -> bytes:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([repr(float(x)) if isinstance(x, (float, np.floating)) else x for x in row])
    return buf.getvalue().encode()


def _plain(x):
    if isinstance(x, np.generic):
        return x.item()
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError(f"not serialisable: {type(x).__name__}")


def _json(doc) -> bytes:
    return (json.dumps(doc, indent=2, sort_keys=True, default=_plain) + "\n").encode()


def _tag(v: float) -> str:
    return f"v{v:g}"


def _finite(x):
    return None if x is None or not math.isfinite(x) else x


# ---------------------------------------------------------------- pipelines
# Each returns a list of (relative path, role, bytes).


def _inflaton_trajectory(cfg: ExperimentConfig, _entry=None):
    params = cfg.inflaton_params()
    p, n = cfg.params, cfg.numerics
    flow = inflaton.make_flow(params)
    traj = dynsys.integrate(flow, (p["phi0"], p["chi0"]), n["t_end"], n["scheme"], n["step"], record_every=n["record_every"])
    H = inflaton.hubble(params, traj.states[:, 0])
    target, dist = inflaton.nearest_attractor(params, traj.final_state)
    summary = {
        "final_time": traj.final_time,
        "final_state": traj.final_state.tolist(),
        "nearest_attractor_phi": target,
        "attractor_distance": dist,
        "anti_damped": params.anti_damped,
        "fixed_points": [
            {
                "location": fp.location.tolist(),
                "classification": fp.classification.value,
                "stable": inflaton.is_stable_fixed_point(params, fp),
            }
            for fp in inflaton.fixed_points(params)
        ],
    }
    rows = zip(traj.times, traj.states[:, 0], traj.states[:, 1])
    return [
        ("trajectory.csv", "trajectory", _csv(("t", "phi", "chi"), rows)),
        ("hubble.csv", "hubble", _csv(("t", "H"), zip(traj.times, H))),
        ("summary.json", "report", _json(summary)),
    ]


def _inflaton_cycle(cfg: ExperimentConfig, _entry=None):
    params = cfg.inflaton_params()
    p, n = cfg.params, cfg.numerics
    z0 = (p["phi0"], p["chi0"])
    rep = inflaton.detect_limit_cycle(params, z0, n["settle_time"], n["observe_time"], n["step"], n["rel_tol"])
    traj = dynsys.integrate(
        inflaton.make_flow(params), z0, n["settle_time"] + n["observe_time"], "rk4", n["step"], record_every=n["record_every"]
    )
    report = {
        "found": rep.found,
        "period": _finite(rep.period),
        "amplitude": rep.amplitude,
        "period_estimate": rep.period_estimate,
        "period_spread": _finite(rep.period_spread),
        "periods": list(rep.periods),
    }
    rows = zip(traj.times, traj.states[:, 0], traj.states[:, 1])
    return [
        ("trajectory.csv", "trajectory", _csv(("t", "phi", "chi"), rows)),
        ("cycle.json", "report", _json(report)),
    ]


def _ymh_poincare(cfg: ExperimentConfig, params: ymh_classical.YmhParams):
    n, E, grid = cfg.numerics, cfg.params["energy"], cfg.grid
    seeds = ymh_classical.seed_grid(params, E, grid.n_radial, grid.n_angular, grid.r_max)
    sec = ymh_classical.poincare_section(params, E, seeds, n["t_end"], n["step"], max_points=n["max_points"])
    tag = _tag(params.v)
    out = [(f"section_{tag}.csv", "section", _csv(("seed_index", "crossing_index", "q2", "p2"), sec.rows()))]
    seed_rows = [(i, q2, p2) for i, (q2, p2) in enumerate(seeds)]
    if n["lyapunov_horizon"] > 0:
        survey = ymh_classical.seed_survey(params, E, seeds, n["lyapunov_horizon"], n["step"], n["renorm_interval"])
        rows = [
            (i, q2, p2, lam, int(ch), d)
            for (i, q2, p2), lam, ch, d in zip(seed_rows, survey.max_exponents, survey.chaotic, survey.energy_drifts)
        ]
        out.append(
            (f"lyapunov_{tag}.csv", "lyapunov", _csv(("seed_index", "q2", "p2", "lambda_max", "chaotic", "energy_drift"), rows))
        )
        fraction = survey.fraction
    else:
        out.append((f"seeds_{tag}.csv", "seeds", _csv(("seed_index", "q2", "p2"), seed_rows)))
        fraction = None
    summary = {
        "g": params.g,
        "v": params.v,
        "energy": E,
        "crossing_rule": sec.crossing_rule,
        "points": int(len(sec.points)),
        "energy_drift": sec.energy_drift,
        "chaotic_fraction": fraction,
        "seed_grid": str(grid),
    }
    out.append((f"section_{tag}.json", "report", _json(summary)))
    return out


def _spectrum(cfg: ExperimentConfig, params):
    n = cfg.numerics
    return ymh_quantum.converge_spectrum(
        params,
        n["L"],
        n["rel_tol"],
        start=n["start"],
        increment=n["increment"],
        max_dim=n["max_dim"],
        omega=cfg.params.get("omega"),
    )


def _spectrum_files(spec, tag):
    rows = [(b.value, i, e) for b in ymh_quantum.BLOCKS for i, e in enumerate(spec.levels[b])]
    conv = {
        "converged": spec.converged,
        "L": spec.L,
        "final_cutoffs": {b.value: c for b, c in spec.final_cutoffs.items()},
        "dimensions": {b.value: d for b, d in spec.dimensions.items()},
        "max_relative_change": {b.value: _finite(c) for b, c in spec.changes.items()},
    }
    return [
        (f"spectrum_{tag}.csv", "spectrum", _csv(("block", "index", "energy"), rows)),
        (f"convergence_{tag}.json", "report", _json(conv)),
    ]


def _ymh_spectrum(cfg: ExperimentConfig, params):
    return _spectrum_files(_spectrum(cfg, params), _tag(params.v))


def _ymh_pstats(cfg: ExperimentConfig, params):
    spec = _spectrum(cfg, params)
    tag = _tag(params.v)
    ana = spectral.analyze_spectrum(spec, cfg.numerics["L"], cfg.numerics["degree"], cfg.numerics["method"])
    spacing_rows = [
        (b.value, s) for b, u in ana.unfolded.items() for s in spectral.spacings(u.unfolded)
    ]
    dist = ana.distribution
    c = dist.centers
    hist_rows = zip(c, dist.density, ana.fit.pdf(c), spectral.poisson_pdf(c), spectral.wigner_pdf(c))
    fit = {**ana.fit.record(), "cross_check": ana.cross_check.record(), "g": params.g, "v": params.v}
    return _spectrum_files(spec, tag) + [
        (f"spacings_{tag}.csv", "spacings", _csv(("block", "s"), spacing_rows)),
        (
            f"histogram_{tag}.csv",
            "histogram",
            _csv(("bin_center", "density", "brody_fit_density", "poisson", "wigner"), hist_rows),
        ),
        (f"fit_{tag}.json", "fit", _json(fit)),
    ]


def _curvature(cfg: ExperimentConfig, _entry=None):
    E = cfg.params.get("energy")
    header = ["g", "v", "E_c", "E_c_numeric", "q1_min", "q2_min"]
    if E is not None:
        header.append("v_c")
    rows = []
    for params in cfg.ymh_params():
        rep = ymh_classical.critical_energy(params)
        row = [rep.g, rep.v, rep.E_c, rep.E_c_numeric, *rep.minimizer]
        if E is not None:
            row.append(rep.v_c_of_E(E))
        rows.append(row)
    return [("curvature.csv", "curvature", _csv(header, rows))]


_SINGLE = {"inflaton_trajectory": _inflaton_trajectory, "inflaton_cycle": _inflaton_cycle, "curvature_report": _curvature}
_SWEEP = {"ymh_poincare": _ymh_poincare, "ymh_spectrum": _ymh_spectrum, "ymh_pstats": _ymh_pstats}


def _sweep_entry(args):
    kind, cfg, params = args
    return _SWEEP[kind](cfg, params)


def _compute(cfg: ExperimentConfig, jobs: int):
    if cfg.kind in _SINGLE:
        return _SINGLE[cfg.kind](cfg)
    tasks = [(cfg.kind, cfg, p) for p in cfg.ymh_params()]
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
            parts = list(pool.map(_sweep_entry, tasks))
    else:
        parts = [_sweep_entry(t) for t in tasks]
    return [item for part in parts for item in part]


def run(config: ExperimentConfig, out_root=None, jobs: int = 1) -> RunManifest:
    """Execute ``config`` and write its outputs under ``<out_root>/<name>/``.

    The output root is, in order: ``out_root``, the config's ``output_dir``,
    ``$CHAOSCOPE_OUT``, ``./chaoscope-out``. Data files are written first
    and the manifest last; on any failure the files of this run are removed.
    """
    config.validate()
    root = Path(out_root) if out_root is not None else (Path(config.output_dir) if config.output_dir else default_output_root())
    directory = root / config.name
    directory.mkdir(parents=True, exist_ok=True)
    manifest_path = directory / MANIFEST_NAME
    if manifest_path.exists():
        manifest_path.unlink()
    t0 = time.perf_counter()
    written: list[Path] = []
    try:
        files = _compute(config, jobs)
        outputs = []
        for rel, role, data in files:
            target = directory / rel
            written.append(target)
            target.write_bytes(data)
            outputs.append(OutputFile(rel, role, hashlib.sha256(data).hexdigest(), len(data)))
        manifest = RunManifest(
            config=config.as_dict(),
            config_text=config.to_text(),
            versions=versions(),
            wall_time=time.perf_counter() - t0,
            outputs=tuple(outputs),
            directory=directory,
        )
        written.append(manifest_path)
        manifest_path.write_text(manifest.to_json())
    except BaseException as exc:
        for path in written:
            path.unlink(missing_ok=True)
        if isinstance(exc, (ChaoscopeError, ValueError, ArithmeticError, np.linalg.LinAlgError)):
            raise ExperimentFailed(f"{config.name} ({config.kind}): {type(exc).__name__}: {exc}") from exc
        raise
    return manifest


# ---------------------------------------------------------------- plot scripts

_PLOT_HEAD = "set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 800,600\n"


def _plot_script(out: OutputFile) -> str | None:
    stem = Path(out.path).stem
    png = f"set output '{stem}.png'\n"
    src = f"'{out.path}'"
    if out.role == "trajectory":
        return (
            _PLOT_HEAD + png + "set xlabel 'phi'\nset ylabel 'dphi/dt'\nunset key\n"
            f"plot {src} using 2:3 with lines lw 1\n"
        )
    if out.role == "hubble":
        return _PLOT_HEAD + png + f"set xlabel 't'\nset ylabel 'H'\nunset key\nplot {src} using 1:2 with lines\n"
    if out.role == "section":
        return (
            _PLOT_HEAD + png + "set xlabel 'q2'\nset ylabel 'p2'\nunset key\n"
            f"plot {src} using 3:4 with dots\n"
        )
    if out.role == "histogram":
        return (
            _PLOT_HEAD + png + "set xlabel 's'\nset ylabel 'P(s)'\nset style fill transparent solid 0.4\nset boxwidth 0.25\n"
            f"plot {src} using 1:2 with boxes title 'data', "
            f"{src} using 1:3 with lines lw 2 title 'Brody fit', "
            f"{src} using 1:4 with lines dt 2 title 'Poisson', "
            f"{src} using 1:5 with lines dt 3 title 'Wigner'\n"
        )
    return None


def emit_plot_data(manifest: RunManifest) -> list[Path]:
    """Write one gnuplot script next to each figure-type CSV of a run."""
    if not manifest.outputs:
        raise ValueError("manifest lists no outputs")
    missing = [o.path for o in manifest.outputs if not (manifest.directory / o.path).is_file()]
    if missing:
        raise FileNotFoundError(f"missing output file(s) in {manifest.directory}: {', '.join(missing)}")
    scripts = []
    for out in manifest.outputs:
        text = _plot_script(out)
        if text is None:
            continue
        path = manifest.directory / f"plot_{Path(out.path).stem}.gp"
        path.write_text(text)
        scripts.append(path)
    return scripts
