"""Command-line experiment harness.

Subcommands: stokes | nls | instability | compare | sweep.  Configuration
is a flat ``key = value`` file (``--config``) plus ``key=value`` overrides on
the command line.  Every run directory receives ``manifest.json`` with the
full configuration and a content hash of the inputs.

Exit codes: 0 pass, 2 tolerance failure, 3 numerical abort; 1 for invalid
configuration.
"""

from __future__ import annotations

import argparse
import dataclasses
import math
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels, nls, records
from .errors import BlowupDetected, WuWaveError
from .initdata import SeedSpec, build_initial_data, verify_admissibility
from .modulation import cubic_remainder_rho, envelope_bundle, remainder
from .spectral import Grid, deriv, fourier, hs_norm
from .stokes import (
    NEWTON_MAX_EPS,
    StokesFamily,
    cosine_amplitudes,
    eulerian_elevation,
    stokes_expansion,
    stokes_newton,
    stokes_state,
    write_table,
)
from .waterwave import compute_A, evolve, holo_residuals, max_stable_dt

EXIT_PASS = 0
EXIT_CONFIG = 1
EXIT_TOLERANCE = 2
EXIT_ABORT = 3

ES_CONSTANT = 5.0
DISTANCE_INITIAL_FACTOR = 2.0
DISTANCE_FINAL_FACTOR = 0.05


class ConfigError(ValueError):
    """Invalid experiment configuration."""


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat experiment parameters; defaults are the desk-scale preset."""

    eps: float = 0.1
    q: int = 10
    n: int = 1024
    dt: float = 0.02
    t_end: float = 250.0
    delta: float = 0.01
    mu: float = 0.1
    s: float = 4.0
    s_prime: float = -1.0  # negative means s + 7
    k0: int = 0  # 0 means the maximizing mode
    eta: float = -1.0  # negative means delta / 200
    n_env: int = 64
    dt_env: float = 1e-3
    n_modes: int = 21
    family_resolution: int = 41
    stride: int = 50
    checkpoint_stride: int = 2500
    fit_start: float = 20.0
    compare_t_end: float = 100.0
    compare_eps: str = "0.05,0.1"
    scan_qs: str = "0.5,0.8,1,1.5,2,3,4"
    nls_q: float = 0.0  # 0 means q1
    nls_n: int = 128
    nls_dt: float = 1e-3
    out: str = "runs/default"

    @property
    def q1(self) -> float:
        return self.eps * self.q

    @property
    def sp(self) -> float:
        return self.s + 7.0 if self.s_prime < 0 else self.s_prime

    @property
    def t_star(self) -> float:
        if self.delta <= 0.0:
            return math.inf
        return math.log(self.mu / self.delta) / self.eps**2

    def validate(self) -> "ExperimentConfig":
        if not 0.0 < self.eps <= NEWTON_MAX_EPS:
            raise ConfigError(f"eps must lie in (0, {NEWTON_MAX_EPS}]")
        if self.q < 1:
            raise ConfigError("q must be a positive integer")
        if self.q1 < 1.0 - 1e-12:
            raise ConfigError(f"q * eps = {self.q1} must be at least 1")
        if self.s < 4:
            raise ConfigError("s must be at least 4")
        if self.n < 8 or self.n & (self.n - 1):
            raise ConfigError("n must be a power of two, at least 8")
        if self.n_env > self.n or self.n_env & (self.n_env - 1):
            raise ConfigError("n_env must be a power of two not above n")
        if not self.dt > 0 or not self.delta >= 0 or not self.mu > 0:
            raise ConfigError("dt and mu must be positive, delta nonnegative")
        if self.dt > max_stable_dt(Grid(self.q, self.n)):
            raise ConfigError(f"dt exceeds the CFL bound {max_stable_dt(Grid(self.q, self.n)):.4g}")
        if self.stride < 1 or self.checkpoint_stride < 1:
            raise ConfigError("strides must be positive")
        return self

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def _coerce(name: str, value: str):
    types = {f.name: f.type for f in dataclasses.fields(ExperimentConfig)}
    if name not in types:
        raise ConfigError(f"unknown configuration key {name!r}")
    kind = types[name]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
    except ValueError as exc:
        raise ConfigError(f"{name}: cannot parse {value!r}") from exc
    return value


def parse_config_text(text: str) -> dict:
    values = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key = value")
        key, _, value = line.partition("=")
        values[key.strip()] = _coerce(key.strip(), value.strip())
    return values


def load_config(path=None, overrides=(), base: dict | None = None) -> ExperimentConfig:
    values = dict(base or {})
    if path:
        values.update(parse_config_text(Path(path).read_text(encoding="utf-8")))
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not key=value")
        key, _, value = item.partition("=")
        values[key.strip()] = _coerce(key.strip(), value.strip())
    return ExperimentConfig(**values).validate()


def _float_list(text: str) -> list[float]:
    return [float(v) for v in text.split(",") if v.strip()]


def _outdir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


# --------------------------------------------------------------------------
# stokes


def run_stokes(eps: float, n_modes: int, out, tol: float = 1e-11) -> int:
    out = _outdir(out)
    records.write_manifest(out / "manifest.json", "stokes",
                           {"eps": eps, "n_modes": n_modes, "tol": tol})
    wave = stokes_newton(eps, n_modes, tol)
    write_table(wave, out / "stokes_table.txt", tol)
    write_table(stokes_expansion(eps), out / "stokes_expansion.txt", tol)
    grid = Grid(1.0, 256)
    amps = cosine_amplitudes(grid, eulerian_elevation(stokes_state(wave, 0.0, grid)))
    formula = [0.5 * eps**2, eps + eps**3 / 8.0, 0.5 * eps**2, 3.0 * eps**3 / 8.0]
    rows = [{"harmonic": k, "newton": a, "formula": f, "difference": a - f}
            for k, (a, f) in enumerate(zip(amps, formula))]
    records.write_csv(out / "eulerian.csv", "eulerian", ["harmonic", "newton", "formula", "difference"], rows)
    ok = wave.residual <= tol and wave.symmetry_defect() <= 1e-12
    records.write_json(out / "summary.json", {
        "eps": eps, "omega": wave.omega, "residual": wave.residual,
        "symmetry_defect": wave.symmetry_defect(), "pass": ok,
    })
    return EXIT_PASS if ok else EXIT_TOLERANCE


# --------------------------------------------------------------------------
# nls


def run_nls(cfg: ExperimentConfig) -> int:
    out = _outdir(cfg.out)
    records.write_manifest(out / "manifest.json", "nls", cfg.as_dict())
    q = cfg.nls_q if cfg.nls_q > 0 else cfg.q1
    rep = nls.instability_run(q, cfg.delta, cfg.mu, int(round(cfg.sp)), n=cfg.nls_n,
                              dt=cfg.nls_dt, record_every=20)
    cols = ["t", "norm", "bound", "ratio"]
    rows = []
    for t, nrm in rep["history"]:
        bound = 2.0 * cfg.delta * math.exp(rep["tau"] * t)
        rows.append({"t": t, "norm": nrm, "bound": bound, "ratio": nrm / bound})
    records.write_csv(out / "nls_run.csv", "nls-run", cols, rows)
    scan = nls.rate_scan(_float_list(cfg.scan_qs))
    records.write_csv(out / "nls_scan.csv", "nls-scan", ["q", "k0", "tau", "fitted_rate", "rel_err"], scan)
    records.plot_series(out / "nls_run.svg",
                        {"|w|_H^s'": ([r["t"] for r in rows], [r["norm"] for r in rows]),
                         "2 delta e^(tau t)": ([r["t"] for r in rows], [r["bound"] for r in rows])},
                        "t", "norm", "standard-form perturbation", logy=True)
    summary = {k: v for k, v in rep.items() if k != "history"}
    summary["literal_pass"] = rep["max_ratio"] <= 2.0 and rep["final_norm"] >= cfg.mu / 4.0
    summary["normalized_pass"] = rep["max_ratio_normalized"] <= 2.0 and rep["final_norm"] >= cfg.mu / 4.0
    records.write_json(out / "summary.json", summary)
    return EXIT_PASS if summary["literal_pass"] else EXIT_TOLERANCE


# --------------------------------------------------------------------------
# water-wave experiments


def seed_envelope(cfg: ExperimentConfig) -> nls.NlsState:
    """B0 = i(1 + w0) with the unstable seed on the envelope torus q1*T."""
    k0 = cfg.k0 if cfg.k0 > 0 else None
    eta = cfg.eta if cfg.eta >= 0 else None
    if cfg.delta == 0.0:
        return nls.NlsState.constant(cfg.q1, cfg.n_env)
    w0 = nls.unstable_seed(cfg.q1, cfg.delta, int(round(cfg.sp)), k0, eta, n=cfg.n_env)
    return nls.lift_to_B(w0, cfg.q1)


def sideband_amplitudes(state, k0: int = 1) -> tuple[float, float]:
    """Normalized Fourier magnitudes of zeta - alpha at grid modes q - k0 and q + k0."""
    g = state.grid
    c = fourier(g, state.offset) / g.length
    q = int(round(g.q))
    return float(abs(c[(q - k0) % g.n])), float(abs(c[(q + k0) % g.n]))


class Diagnostics:
    """Per-snapshot diagnostics along one water-wave run."""

    COLUMNS = ["t", "Es_sqrt", "Es_bound", "dt_r", "r_a", "dt2_r", "rho_norm", "rho_minus_2r",
               "sideband_minus", "sideband_plus", "family_distance", "family_gamma",
               "holo_zeta", "holo_u", "A_min"]

    def __init__(self, cfg: ExperimentConfig, wave, B0: nls.NlsState, family=None):
        self.cfg = cfg
        self.wave = wave
        self.B = B0
        self.family = family
        self.delta_ref = cfg.delta if cfg.delta > 0 else 1.0
        self.k0 = cfg.k0 if cfg.k0 > 0 else nls.growth_rate(cfg.q1)[1]

    def envelope_at(self, t: float) -> nls.NlsState:
        T = self.cfg.eps**2 * t
        if T > self.B.T:
            self.B = nls.split_step_evolve(self.B, self.cfg.dt_env, T)
        return self.B

    def __call__(self, state) -> dict:
        cfg = self.cfg
        eps, s = cfg.eps, cfg.s
        g = state.grid
        B = self.envelope_at(state.t)
        bundle = envelope_bundle(B, eps, state.t, g, stokes=self.wave)
        r, dr, ddr, E = remainder(state, bundle, s)
        st = bundle.extra["stokes_state"]
        rho = cubic_remainder_rho(state, st, bundle)
        sm, sp = sideband_amplitudes(state, self.k0)
        row = {
            "t": state.t,
            "Es_sqrt": math.sqrt(E),
            "Es_bound": ES_CONSTANT * eps**1.5 * self.delta_ref * math.exp(eps**2 * state.t),
            "dt_r": hs_norm(g, dr, s + 0.5),
            "r_a": hs_norm(g, deriv(g, r), s),
            "dt2_r": hs_norm(g, ddr, s),
            "rho_norm": hs_norm(g, deriv(g, rho), s),
            "rho_minus_2r": hs_norm(g, deriv(g, rho - 2.0 * r), s),
            "sideband_minus": sm,
            "sideband_plus": sp,
            "family_distance": float("nan"),
            "family_gamma": float("nan"),
        }
        if self.family is not None:
            d, gam, _ = self.family.distance(state)
            row["family_distance"], row["family_gamma"] = d, gam
        row["holo_zeta"], row["holo_u"] = holo_residuals(state)
        row["A_min"] = float(np.min(compute_A(state)))
        return row


def _fit_window(rows, key, t0, t1):
    pts = [(r["t"], r[key]) for r in rows if t0 <= r["t"] <= t1 and r[key] > 0]
    if len(pts) < 3:
        return float("nan")
    t, a = zip(*pts)
    return nls.fit_rate(t, a)


def run_instability(cfg: ExperimentConfig, family: StokesFamily | None = None) -> tuple[int, dict]:
    """The headline experiment; returns (exit code, summary)."""
    out = _outdir(cfg.out)
    (out / "checkpoints").mkdir(exist_ok=True)
    records.write_manifest(out / "manifest.json", "instability", cfg.as_dict(),
                           {"backend": kernels.BACKEND})
    eps = cfg.eps
    wave = stokes_newton(eps, cfg.n_modes)
    B0 = seed_envelope(cfg)
    state = build_initial_data(SeedSpec(B0, eps, wave, n=cfg.n, s_prime=cfg.sp))
    adm = verify_admissibility(state)
    if family is None:
        family = StokesFamily(min(NEWTON_MAX_EPS, 1.5 * eps), cfg.family_resolution, cfg.n_modes)
    diag = Diagnostics(cfg, wave, B0, family)
    tau, k0_best = nls.growth_rate(cfg.q1)
    k0 = cfg.k0 if cfg.k0 > 0 else k0_best
    steps = int(round((cfg.t_end - state.t) / cfg.dt))
    i_star = int(round(cfg.t_star / cfg.dt)) if math.isfinite(cfg.t_star) else -1
    rows: list[dict] = []
    writer = records.CsvWriter(out / "timeseries.csv", "instability-timeseries", Diagnostics.COLUMNS)
    at_star: dict = {}

    def observer(st, i):
        if i % cfg.checkpoint_stride == 0 or i == steps:
            records.write_checkpoint(out / "checkpoints" / f"step{i:07d}.bin", st, eps)
        if i % cfg.stride == 0 or i == steps or i == i_star:
            row = diag(st)
            rows.append(row)
            writer.write(row)
            if i == i_star:
                at_star.update(row)

    summary: dict = {"aborted": False}
    code = EXIT_PASS
    try:
        evolve(state, cfg.t_end, cfg.dt, observers=(observer,), every=1)
    except BlowupDetected as exc:
        summary.update({"aborted": True, "abort_time": exc.t, "abort_reason": str(exc)})
        code = EXIT_ABORT
    finally:
        writer.close()

    eps2 = eps**2
    first = rows[0] if rows else {}
    last = rows[-1] if rows else {}
    star = at_star or last
    horizon = [r for r in rows if r["t"] <= cfg.compare_t_end + 1e-9]
    es_ratio = max((r["Es_sqrt"] / r["Es_bound"] for r in horizon), default=float("nan"))
    sideband = [dict(r, sideband=math.hypot(r["sideband_minus"], r["sideband_plus"])) for r in rows]
    fitted = _fit_window(sideband, "sideband", cfg.fit_start, cfg.t_end)
    summary.update({
        "eps": eps, "q": cfg.q, "q1": cfg.q1, "delta": cfg.delta, "mu": cfg.mu,
        "k0": k0, "tau": tau,
        "t_star": cfg.t_star, "t_star_reached": bool(at_star),
        "initial_distance": first.get("family_distance"),
        "final_distance": last.get("family_distance"),
        "distance_at_t_star": star.get("family_distance"),
        "initial_distance_bound": DISTANCE_INITIAL_FACTOR * cfg.delta * math.sqrt(eps),
        "final_distance_threshold": DISTANCE_FINAL_FACTOR * math.sqrt(eps),
        "fitted_sideband_rate": fitted,
        "expected_rate": eps2 * tau,
        "corrected_rate": eps2 * nls.envelope_rate(k0, cfg.q1),
        "Es_sqrt_initial": first.get("Es_sqrt"),
        "Es_max_ratio": es_ratio,
        "holo_growth": max((max(r["holo_zeta"] - first["holo_zeta"], r["holo_u"] - first["holo_u"])
                            for r in rows), default=float("nan")),
        "admissibility": dataclasses.asdict(adm) | {"passed": adm.passed},
    })
    if not summary["aborted"]:
        ok = (first.get("family_distance", math.inf) <= summary["initial_distance_bound"]
              and bool(at_star)
              and star.get("family_distance", 0.0) >= summary["final_distance_threshold"])
        summary["distance_criterion_pass"] = ok
        code = EXIT_PASS if ok else EXIT_TOLERANCE
    records.write_json(out / "summary.json", summary)
    if rows:
        t = [r["t"] for r in rows]
        records.plot_series(out / "sidebands.svg",
                            {"mode q-1": (t, [r["sideband_minus"] for r in rows]),
                             "mode q+1": (t, [r["sideband_plus"] for r in rows])},
                            "t", "amplitude", "sideband growth", logy=True)
        records.plot_series(out / "distance.svg",
                            {"family distance": (t, [r["family_distance"] for r in rows])},
                            "t", "L2 distance", "distance to the Stokes family")
        records.plot_series(out / "remainder.svg",
                            {"E_s^1/2": (t, [r["Es_sqrt"] for r in rows]),
                             "bound": (t, [r["Es_bound"] for r in rows])},
                            "t", "E_s^1/2", "remainder energy", logy=True)
    return code, summary


def compare_point(cfg: ExperimentConfig, eps: float, t_end: float) -> list[dict]:
    """E_s^{1/2}(t) along one run at amplitude eps, q = q1/eps, n scaled with q."""
    q = int(round(cfg.q1 / eps))
    n = 1 << int(math.ceil(math.log2(cfg.n * q / cfg.q)))
    sub = dataclasses.replace(cfg, eps=eps, q=q, n=n, dt=min(cfg.dt, max_stable_dt(Grid(q, n))))
    wave = stokes_newton(eps, cfg.n_modes)
    B0 = seed_envelope(sub)
    state = build_initial_data(SeedSpec(B0, eps, wave, n=n, s_prime=sub.sp))
    diag = Diagnostics(sub, wave, B0, family=None)
    rows = []

    def observer(st, i):
        if i % sub.stride == 0:
            row = diag(st)
            rows.append({"eps": eps, "t": st.t, "Es_sqrt": row["Es_sqrt"], "bound": row["Es_bound"],
                         "ratio": row["Es_sqrt"] / row["Es_bound"]})

    if t_end > 0:
        evolve(state, t_end, sub.dt, observers=(observer,), every=1)
    else:
        observer(state, 0)
    return rows


def scaling_slope(eps_values, values) -> float:
    return float(np.polyfit(np.log(eps_values), np.log(values), 1)[0])


def run_compare(cfg: ExperimentConfig) -> tuple[int, dict]:
    out = _outdir(cfg.out)
    records.write_manifest(out / "manifest.json", "compare", cfg.as_dict())
    eps_list = _float_list(cfg.compare_eps)
    rows = []
    for eps in eps_list:
        rows.extend(compare_point(cfg, eps, cfg.compare_t_end))
    records.write_csv(out / "compare.csv", "compare", ["eps", "t", "Es_sqrt", "bound", "ratio"], rows)
    initial = [next(r["Es_sqrt"] for r in rows if r["eps"] == e) for e in eps_list]
    slope = scaling_slope(eps_list, initial) if len(eps_list) > 1 else float("nan")
    max_ratio = max(r["ratio"] for r in rows)
    summary = {"eps": eps_list, "Es_sqrt_initial": initial, "slope": slope, "max_ratio": max_ratio,
               "slope_pass": abs(slope - 1.5) <= 0.25, "bound_pass": max_ratio <= 1.0}
    records.write_json(out / "summary.json", summary)
    records.plot_series(out / "compare.svg",
                        {f"eps={e}": ([r["t"] for r in rows if r["eps"] == e],
                                      [r["Es_sqrt"] for r in rows if r["eps"] == e]) for e in eps_list},
                        "t", "E_s^1/2", "remainder energy", logy=True)
    ok = summary["slope_pass"] and summary["bound_pass"]
    return (EXIT_PASS if ok else EXIT_TOLERANCE), summary


# --------------------------------------------------------------------------
# dispatch


def run_command(command: str, cfg_values: dict) -> int:
    """Run one configured command in this process; returns the exit code."""
    cfg = ExperimentConfig(**cfg_values).validate()
    try:
        if command == "nls":
            return run_nls(cfg)
        if command == "instability":
            return run_instability(cfg)[0]
        if command == "compare":
            return run_compare(cfg)[0]
    except WuWaveError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT
    raise ConfigError(f"unknown command {command!r}")


def run_sweep(command: str, param: str, values, cfg: ExperimentConfig, workers: int = 1) -> int:
    """Fan independent runs out over worker processes; returns the worst exit code."""
    base = Path(cfg.out)
    jobs = []
    for v in values:
        vals = cfg.as_dict()
        vals[param] = _coerce(param, v)
        vals["out"] = str(base / f"{param}={v}")
        ExperimentConfig(**vals).validate()
        jobs.append(vals)
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            codes = list(pool.map(run_command, [command] * len(jobs), jobs))
    else:
        codes = [run_command(command, j) for j in jobs]
    return max(codes, default=EXIT_PASS)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="wuwave", description="Modulated Stokes wave experiments.")
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("stokes", help="Stokes coefficient table and Eulerian harmonics")
    ps.add_argument("--eps", type=float, required=True)
    ps.add_argument("--n-modes", type=int, default=21)
    ps.add_argument("--tol", type=float, default=1e-11)
    ps.add_argument("--out", default="runs/stokes")

    for name, text in (("nls", "envelope instability run and rate scan"),
                       ("instability", "water-wave Benjamin-Feir experiment"),
                       ("compare", "water wave against the modulation approximation")):
        pc = sub.add_parser(name, help=text)
        pc.add_argument("--config")
        pc.add_argument("overrides", nargs="*", metavar="key=value")

    pw = sub.add_parser("sweep", help="run a command over several values of one key")
    pw.add_argument("target", choices=["nls", "instability", "compare"])
    pw.add_argument("--param", required=True)
    pw.add_argument("--values", required=True, help="comma-separated values")
    pw.add_argument("--workers", type=int, default=1)
    pw.add_argument("--config")
    pw.add_argument("overrides", nargs="*", metavar="key=value")
    return p


def main(argv=None) -> int:
    parser = build_parser()
    # key=value overrides may follow options (as in sweep), which a plain
    # parse leaves unrecognized
    args, extra = parser.parse_known_args(argv)
    stray = [a for a in extra if a.startswith("-") or "=" not in a]
    if stray or (extra and args.command == "stokes"):
        parser.error(f"unrecognized arguments: {' '.join(stray or extra)}")
    if extra:
        args.overrides = list(args.overrides) + extra
    try:
        if args.command == "stokes":
            return run_stokes(args.eps, args.n_modes, args.out, args.tol)
        cfg = load_config(args.config, args.overrides)
        if args.command == "sweep":
            values = [v.strip() for v in args.values.split(",") if v.strip()]
            return run_sweep(args.target, args.param, values, cfg, args.workers)
        return run_command(args.command, cfg.as_dict())
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except WuWaveError as exc:
        print(f"numerical abort: {exc}", file=sys.stderr)
        return EXIT_ABORT


if __name__ == "__main__":
    sys.exit(main())
