"""Command-line experiment runner over all modules.

Subcommands emit plot-ready CSV/JSON only; plotting itself is out of scope.
All values are reported in units of the total escape rate (rates divided by
2 gamma_bar, times multiplied by it) unless --raw-units is given. Binary
ensembles always store raw times; scaling is applied when curves are
written. Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 fit non-convergence (outputs are still written).
"""
from __future__ import annotations

import argparse
import concurrent.futures
import hashlib
import json
import sys
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from .etd import (
    etd_coefficients,
    etd_eval,
    integrated_etd_eval,
    moments_and_cumulants,
    symmetric_rho0,
    site_rho0,
)
from .fitting import fit_integrated_etd
from .generators import (
    ChainGenerator,
    FeedbackConfig,
    RateConfig,
    SetLeadConfig,
    build_feedback_generator,
    build_set_generator,
    build_ssh_generator,
)
from .sampling import (
    ReconstructedCurve,
    load_ensemble,
    reconstruct_etd,
    reconstruct_integrated_etd,
    sample_ensemble_from_generator,
    save_ensemble,
)
from .spectral import InversionValidationError, ConvergenceError, eigendecompose
from .topology import GapClosedError, winding_number

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_FIT = 4


class ConfigError(ValueError):
    pass


# ----------------------------- configuration -----------------------------

@dataclass
class ExperimentConfig:
    """Declarative description of one full pipeline run (JSON file format)."""

    model: str = "ssh"
    gamma_bar: float = 1.0
    alpha: float = -0.5
    n_sites: int = 10
    feedback: dict = field(default_factory=dict)
    set_leads: dict = field(default_factory=dict)
    alpha_min: float = -0.9
    alpha_max: float = 0.9
    steps: int = 21
    i_max: int = 100_000
    seed: int = 1
    initial: str = "symmetric_edges"
    n_av: int = 100
    n_step: int = 500
    k_terms: int = 3
    output_dir: str = "."
    raw_units: bool = False

    def __post_init__(self):
        if self.model not in ("ssh", "set", "feedback"):
            raise ConfigError(f"unknown model {self.model!r}")
        if self.steps < 1:
            raise ConfigError("sweep steps must be >= 1")
        if self.n_sites < 1:
            raise ConfigError("n_sites must be >= 1")

    @classmethod
    def from_file(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        try:
            return cls(**doc)
        except TypeError as exc:
            raise ConfigError(str(exc)) from exc


def build_generator(cfg: ExperimentConfig):
    if cfg.model == "ssh":
        return build_ssh_generator(RateConfig(gamma_bar=cfg.gamma_bar, alpha=cfg.alpha), cfg.n_sites)
    if cfg.model == "feedback":
        fb = cfg.feedback
        try:
            if {"gamma_R", "gamma_L_even", "gamma_L_odd"} <= set(fb):
                fc = FeedbackConfig(fb["gamma_R"], fb["gamma_L_even"], fb["gamma_L_odd"])
            else:
                fc = FeedbackConfig.from_bias(fb["gamma_L_even"], fb.get("alpha", cfg.alpha))
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad feedback rates: {exc}") from exc
        return build_feedback_generator(fc, cfg.n_sites)
    if cfg.n_sites % 2 != 0:
        raise ConfigError("set model needs an even n_sites (two sites per counted charge)")
    try:
        lead = SetLeadConfig(**cfg.set_leads)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad set_leads: {exc}") from exc
    return build_set_generator(lead, cfg.n_sites // 2)


# ----------------------------- unit handling -----------------------------

def rate_unit(generator) -> float:
    """Total escape-rate scale of a generator (2 gamma_bar for the chain)."""
    return float(np.mean(generator.escape_rates()))


@dataclass(frozen=True)
class Units:
    """Multiplicative factors applied to raw quantities before output."""

    rate: float  # divide rates by this
    raw: bool

    def time(self, t):
        return t if self.raw else t * self.rate

    def beta(self, b):
        return b if self.raw else b / self.rate

    def density(self, p):
        return p if self.raw else p / self.rate

    def cumulant(self, k, order):
        return k if self.raw else k * self.rate**order


def _units(generator, raw: bool) -> Units:
    return Units(rate=rate_unit(generator), raw=raw)


# ----------------------------- output helpers -----------------------------

def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return f"{x:.17g}"
    return str(x)


def write_csv(path, header: list[str], rows) -> None:
    lines = [",".join(header)]
    lines += [",".join(_fmt(x) for x in row) for row in rows]
    Path(path).write_text("\n".join(lines) + "\n")


def write_json(path, doc) -> None:
    text = json.dumps(doc, indent=2, sort_keys=True)
    if path in (None, "-"):
        print(text)
    else:
        Path(path).write_text(text + "\n")


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


# ----------------------------- subcommands -----------------------------

def cmd_winding(args) -> int:
    try:
        config = RateConfig(gamma_bar=args.gamma_bar, alpha=args.alpha)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    try:
        result = winding_number(config, n_grid=args.n_grid)
    except GapClosedError:
        write_json(args.output, {"W": None, "zak_phase": None, "label": "critical"})
        return EXIT_NUMERICAL
    write_json(args.output, result.as_dict())
    return EXIT_OK


def _spectrum_rows(gamma_bar, alpha, n_sites, units):
    gen = build_ssh_generator(RateConfig(gamma_bar=gamma_bar, alpha=alpha), n_sites)
    dec = eigendecompose(gen)
    rows = []
    for j in range(n_sites):
        v = dec.vectors[:, j]
        rows.append(
            (alpha, j + 1, units.beta(dec.betas[j]), dec.parities[j], v[0] ** 2 + v[-1] ** 2)
        )
    return rows


def cmd_spectrum(args) -> int:
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.steps)
    ref = build_ssh_generator(RateConfig(gamma_bar=args.gamma_bar, alpha=alphas[0]), args.n)
    units = _units(ref, args.raw_units)
    rows = []
    for alpha in alphas:
        rows.extend(_spectrum_rows(args.gamma_bar, float(alpha), args.n, units))
    write_csv(args.output, ["alpha", "j", "beta", "parity", "edge_weight"], rows)
    return EXIT_OK


def _resolve_rho0(spec: str, n: int) -> np.ndarray:
    if spec in ("symmetric", "symmetric_edges"):
        return symmetric_rho0(n)
    if spec.startswith("site:"):
        return site_rho0(n, int(spec.split(":", 1)[1]))
    raise ConfigError(f"unknown rho0 spec {spec!r} (use 'symmetric' or 'site:<k>')")


def cmd_etd(args) -> int:
    config = RateConfig(gamma_bar=args.gamma_bar, alpha=args.alpha)
    gen = build_ssh_generator(config, args.n)
    units = _units(gen, args.raw_units)
    dec = eigendecompose(gen)
    model = etd_coefficients(dec, gen, _resolve_rho0(args.rho0, args.n))
    if args.coefficients:
        rows = [
            (j + 1, units.beta(model.betas[j]), units.beta(model.a[j]), model.A[j],
             model.parities[j] if model.parities else "none")
            for j in range(args.n)
        ]
        write_csv(args.output, ["j", "beta", "a", "A", "parity"], rows)
        return EXIT_OK
    t_max = args.t_max
    if t_max is None:
        mu1 = moments_and_cumulants(model, 1)["moments"][1]
        t_max = 8.0 * mu1
    elif not args.raw_units:
        t_max = t_max / units.rate  # flag is given in output units
    t = np.linspace(0.0, t_max, args.points)
    pe = etd_eval(model, t)
    pint = integrated_etd_eval(model, t)
    rows = zip(units.time(t), units.density(pe), pint)
    write_csv(args.output, ["t", "pe", "pint"], rows)
    return EXIT_OK


def cmd_sample(args) -> int:
    if args.generator is not None:
        try:
            gen = ChainGenerator.from_json(Path(args.generator).read_text())
        except (OSError, KeyError, json.JSONDecodeError, ValueError) as exc:
            raise ConfigError(f"cannot read generator {args.generator}: {exc}") from exc
    else:
        cfg = ExperimentConfig(
            model=args.model,
            gamma_bar=args.gamma_bar,
            alpha=args.alpha,
            n_sites=args.n,
            feedback=json.loads(args.feedback) if args.feedback else {},
            set_leads=json.loads(args.set_leads) if args.set_leads else {},
        )
        gen = build_generator(cfg)
    ens = sample_ensemble_from_generator(gen, args.i_max, args.initial, args.seed,
                                         threads=args.threads)
    save_ensemble(args.output, ens)
    return EXIT_OK


def cmd_reconstruct(args) -> int:
    ens = load_ensemble(args.input)
    scale = 1.0
    if not args.raw_units:
        scale = _ensemble_rate_unit(ens)
    cum = reconstruct_integrated_etd(ens, args.n_av, args.n_step)
    dens = reconstruct_etd(ens, args.n_av, args.n_step)
    rows = [(t * scale, v, "integrated_etd") for t, v in zip(cum.t, cum.values)]
    rows += [(t * scale, v / scale, "etd") for t, v in zip(dens.t, dens.values)]
    write_csv(args.output, ["t", "value", "kind"], rows)
    return EXIT_OK


def _ensemble_rate_unit(ens) -> float:
    cfg = ens.config or {}
    if "gamma_bar" in cfg:
        return 2.0 * float(cfg["gamma_bar"])
    if {"gamma_R", "gamma_L_even", "gamma_L_odd"} <= set(cfg):
        return float(2.0 * cfg["gamma_R"] + cfg["gamma_L_even"] + cfg["gamma_L_odd"]) / 2.0
    return 1.0


def _read_curve_csv(path) -> ReconstructedCurve:
    lines = Path(path).read_text().strip().splitlines()
    header = lines[0].split(",")
    try:
        it, iv, ik = header.index("t"), header.index("value"), header.index("kind")
    except ValueError as exc:
        raise ConfigError(f"{path}: expected columns t,value,kind") from exc
    t, v = [], []
    for line in lines[1:]:
        parts = line.split(",")
        if parts[ik] == "integrated_etd":
            t.append(float(parts[it]))
            v.append(float(parts[iv]))
    if not t:
        raise ConfigError(f"{path}: no integrated_etd rows")
    return ReconstructedCurve(
        t=np.asarray(t), values=np.asarray(v), kind="integrated_etd", n_av=0, n_step=0
    )


def cmd_fit(args) -> int:
    curve = _read_curve_csv(args.input)
    result = fit_integrated_etd(curve, args.k, restarts=args.restarts, seed=args.seed)
    doc = {
        "terms": [{"beta": float(b), "A": float(a)} for b, a in zip(result.betas, result.A)],
        "residual": result.residual,
        "converged": result.converged,
        "k_terms": result.k_terms,
        "iterations": result.iterations,
    }
    write_json(args.output, doc)
    return EXIT_OK if result.converged else EXIT_FIT


# ----------------------------- pipeline cells -----------------------------

def _fit_cell(params) -> tuple[float, list[float], list[float], bool]:
    """One sweep cell: sample, reconstruct, fit. Top-level so pools can pickle it."""
    gamma_bar, alpha, n_sites, i_max, seed, initial, n_av, n_step, k = params
    gen = build_ssh_generator(RateConfig(gamma_bar=gamma_bar, alpha=alpha), n_sites)
    ens = sample_ensemble_from_generator(gen, i_max, initial, seed)
    curve = reconstruct_integrated_etd(ens, n_av, n_step)
    fit = fit_integrated_etd(curve, k, seed=seed)
    return alpha, list(fit.betas), list(fit.A), fit.converged


def _map_cells(cells, threads: int):
    if threads > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(_fit_cell, cells))
    return [_fit_cell(c) for c in cells]


def cmd_sweep_fit(args) -> int:
    alphas = np.linspace(args.alpha_min, args.alpha_max, args.steps)
    cells = [
        (args.gamma_bar, float(a), args.n, args.i_max, args.seed, args.initial,
         args.n_av, args.n_step, args.k)
        for a in alphas
    ]
    results = _map_cells(cells, args.threads)
    ref = build_ssh_generator(RateConfig(gamma_bar=args.gamma_bar, alpha=alphas[0]), args.n)
    units = _units(ref, args.raw_units)
    rows = []
    all_converged = True
    for alpha, betas, A, conv in results:
        all_converged &= conv
        for j, (b, a) in enumerate(zip(betas, A)):
            rows.append((alpha, j + 1, units.beta(b), a))
    write_csv(args.output, ["alpha", "j", "beta", "A"], rows)
    return EXIT_OK if all_converged else EXIT_FIT


def reproduce_fig2(cfg: ExperimentConfig, analytic_path, fitted_path, threads: int = 1) -> int:
    """Exponent spectrum with weights: exact diagonalization versus the
    sampled-and-fitted pipeline, swept over the bond bias."""
    if cfg.model != "ssh":
        raise ConfigError("the spectrum sweep recipe is defined for the ssh model")
    alphas = np.linspace(cfg.alpha_min, cfg.alpha_max, cfg.steps)
    ref = build_ssh_generator(RateConfig(gamma_bar=cfg.gamma_bar, alpha=float(alphas[0])), cfg.n_sites)
    units = _units(ref, cfg.raw_units)
    analytic_rows = []
    for alpha in alphas:
        gen = build_ssh_generator(RateConfig(gamma_bar=cfg.gamma_bar, alpha=float(alpha)), cfg.n_sites)
        dec = eigendecompose(gen)
        model = etd_coefficients(dec, gen, symmetric_rho0(cfg.n_sites))
        for j in range(cfg.n_sites):
            analytic_rows.append(
                (alpha, j + 1, units.beta(model.betas[j]), model.A[j], model.parities[j])
            )
    write_csv(analytic_path, ["alpha", "j", "beta", "A", "parity"], analytic_rows)

    cells = [
        (cfg.gamma_bar, float(a), cfg.n_sites, cfg.i_max, cfg.seed, cfg.initial,
         cfg.n_av, cfg.n_step, cfg.k_terms)
        for a in alphas
    ]
    results = _map_cells(cells, threads)
    fitted_rows = []
    all_converged = True
    for alpha, betas, A, conv in results:
        all_converged &= conv
        for j, (b, a) in enumerate(zip(betas, A)):
            fitted_rows.append((alpha, j + 1, units.beta(b), a))
    write_csv(fitted_path, ["alpha", "j", "beta", "A"], fitted_rows)
    return EXIT_OK if all_converged else EXIT_FIT


def cmd_reproduce_fig2(args) -> int:
    cfg = _config_from_args(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return reproduce_fig2(cfg, out / "fig2_analytic.csv", out / "fig2_fitted.csv", args.threads)


def reproduce_fig3(cfg: ExperimentConfig, curves_path, cumulants_path) -> int:
    """Escape-time density and cumulative curve (analytic vs reconstructed)
    at one bias, plus the cumulant sweep which stays smooth through zero."""
    if cfg.model != "ssh":
        raise ConfigError("the escape-curve recipe is defined for the ssh model")
    config = RateConfig(gamma_bar=cfg.gamma_bar, alpha=cfg.alpha)
    gen = build_ssh_generator(config, cfg.n_sites)
    units = _units(gen, cfg.raw_units)
    dec = eigendecompose(gen)
    model = etd_coefficients(dec, gen, symmetric_rho0(cfg.n_sites))
    ens = sample_ensemble_from_generator(gen, cfg.i_max, cfg.initial, cfg.seed)
    cum = reconstruct_integrated_etd(ens, cfg.n_av, cfg.n_step)
    dens = reconstruct_etd(ens, cfg.n_av, cfg.n_step)
    rows = []
    for i, (t, v) in enumerate(zip(cum.t, cum.values)):
        pe_rec = units.density(dens.values[i]) if i < dens.values.size else ""
        rows.append(
            (units.time(t), units.density(etd_eval(model, t)),
             integrated_etd_eval(model, t), pe_rec, v)
        )
    write_csv(curves_path, ["t", "pe_analytic", "pint_analytic", "pe_recon", "pint_recon"], rows)

    alphas = np.linspace(cfg.alpha_min, cfg.alpha_max, cfg.steps)
    crows = []
    for alpha in alphas:
        g = build_ssh_generator(RateConfig(gamma_bar=cfg.gamma_bar, alpha=float(alpha)), cfg.n_sites)
        d = eigendecompose(g)
        m = etd_coefficients(d, g, symmetric_rho0(cfg.n_sites))
        kap = moments_and_cumulants(m, 3)["cumulants"]
        crows.append((alpha, *(units.cumulant(kap[m], m) for m in (1, 2, 3))))
    write_csv(cumulants_path, ["alpha", "kappa1", "kappa2", "kappa3"], crows)
    return EXIT_OK


def cmd_reproduce_fig3(args) -> int:
    cfg = _config_from_args(args)
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return reproduce_fig3(cfg, out / "fig3_curves.csv", out / "fig3_cumulants.csv")


# ----------------------------- experiment runner -----------------------------

def run_experiment(cfg: ExperimentConfig) -> dict:
    """Execute generate -> decompose -> etd -> sample -> reconstruct -> fit.

    Each stage writes one artifact; the manifest records every completed
    stage with a content hash. A stage failure stops the pipeline and is
    recorded in the manifest, which is always written.
    """
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {"config": asdict(cfg), "artifacts": [], "completed": [], "error": None}

    def record(stage, path):
        manifest["artifacts"].append(
            {"stage": stage, "path": str(path), "sha256": _sha256(path)}
        )
        manifest["completed"].append(stage)

    exit_code = EXIT_OK
    try:
        gen = build_generator(cfg)
        chain = gen if isinstance(gen, ChainGenerator) else None
        path = out / "generator.json"
        doc = gen.to_dict() if chain is not None else {
            "n_sites": gen.n_sites,
            "diagonal": gen.diagonal.tolist(),
            "lower": gen.lower.tolist(),
            "upper": gen.upper.tolist(),
            "jump_left": gen.jump_left.tolist(),
            "jump_right": gen.jump_right.tolist(),
            "config": gen.config,
        }
        path.write_text(json.dumps(doc, sort_keys=True, indent=2) + "\n")
        record("generate", path)
        units = _units(gen, cfg.raw_units)

        if chain is None:
            if not gen.is_symmetric(1e-9):
                raise ConvergenceError(
                    "spectral stage requires a symmetric generator; "
                    "this lead configuration is away from half occupation"
                )
            chain = gen.to_chain_generator()
        dec = eigendecompose(chain)
        path = out / "spectrum.csv"
        rows = [
            (j + 1, units.beta(dec.betas[j]), dec.parities[j],
             dec.vectors[0, j] ** 2 + dec.vectors[-1, j] ** 2)
            for j in range(chain.n_sites)
        ]
        write_csv(path, ["j", "beta", "parity", "edge_weight"], rows)
        record("decompose", path)

        model = etd_coefficients(dec, chain, symmetric_rho0(chain.n_sites))
        path = out / "etd.csv"
        rows = [
            (j + 1, units.beta(model.betas[j]), units.beta(model.a[j]), model.A[j],
             model.parities[j])
            for j in range(chain.n_sites)
        ]
        write_csv(path, ["j", "beta", "a", "A", "parity"], rows)
        record("etd", path)

        ens = sample_ensemble_from_generator(gen, cfg.i_max, cfg.initial, cfg.seed)
        path = out / "ensemble.bin"
        save_ensemble(path, ens)
        record("sample", path)

        cum = reconstruct_integrated_etd(ens, cfg.n_av, cfg.n_step)
        dens = reconstruct_etd(ens, cfg.n_av, cfg.n_step)
        path = out / "curve.csv"
        rows = [(units.time(t), v, "integrated_etd") for t, v in zip(cum.t, cum.values)]
        rows += [(units.time(t), units.density(v), "etd") for t, v in zip(dens.t, dens.values)]
        write_csv(path, ["t", "value", "kind"], rows)
        record("reconstruct", path)

        scaled = ReconstructedCurve(
            t=units.time(cum.t), values=cum.values, kind="integrated_etd",
            n_av=cfg.n_av, n_step=cfg.n_step,
        )
        fit = fit_integrated_etd(scaled, cfg.k_terms, seed=cfg.seed)
        path = out / "fit.json"
        write_json(path, {
            "terms": [{"beta": float(b), "A": float(a)} for b, a in zip(fit.betas, fit.A)],
            "residual": fit.residual,
            "converged": fit.converged,
            "k_terms": fit.k_terms,
            "iterations": fit.iterations,
        })
        record("fit", path)
        if not fit.converged:
            exit_code = EXIT_FIT
    except (ConvergenceError, InversionValidationError, GapClosedError, RuntimeError) as exc:
        manifest["error"] = str(exc)
        exit_code = EXIT_NUMERICAL
    except ValueError as exc:
        manifest["error"] = str(exc)
        exit_code = EXIT_CONFIG

    write_json(out / "run_manifest.json", manifest)
    manifest["exit_code"] = exit_code
    return manifest


def cmd_run(args) -> int:
    cfg = ExperimentConfig.from_file(args.config)
    overrides = {}
    if args.output_dir is not None:
        overrides["output_dir"] = args.output_dir
    if args.seed is not None:
        overrides["seed"] = args.seed
    if overrides:
        cfg = ExperimentConfig(**{**asdict(cfg), **overrides})
    manifest = run_experiment(cfg)
    return manifest["exit_code"]


def _config_from_args(args) -> ExperimentConfig:
    base = {}
    if getattr(args, "config", None):
        base = asdict(ExperimentConfig.from_file(args.config))
    for name in (
        "gamma_bar", "alpha", "n_sites", "alpha_min", "alpha_max", "steps",
        "i_max", "seed", "initial", "n_av", "n_step", "k_terms", "output_dir",
        "raw_units",
    ):
        val = getattr(args, name, None)
        if val is not None:
            base[name] = val
    try:
        return ExperimentConfig(**base)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc


# ----------------------------- argument parsing -----------------------------

def _add_rate_args(p, alpha_default=None):
    p.add_argument("--gamma-bar", type=float, default=1.0, dest="gamma_bar")
    p.add_argument("--alpha", type=float, default=alpha_default)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="sshwalk",
        description="Random walks with alternating bond rates: spectra, "
        "escape-time statistics and the counting-field winding invariant.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("winding", help="winding number of the counting-field vector")
    _add_rate_args(p, alpha_default=-0.5)
    p.add_argument("--n-grid", type=int, default=256, dest="n_grid")
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_winding)

    p = sub.add_parser("spectrum", help="decay exponents over a bias sweep")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma-bar", type=float, default=1.0, dest="gamma_bar")
    p.add_argument("--alpha-min", type=float, required=True, dest="alpha_min")
    p.add_argument("--alpha-max", type=float, required=True, dest="alpha_max")
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--raw-units", action="store_true", dest="raw_units")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_spectrum)

    p = sub.add_parser("etd", help="analytic escape-time distribution")
    p.add_argument("--n", type=int, required=True)
    _add_rate_args(p, alpha_default=-0.5)
    p.add_argument("--rho0", default="symmetric")
    p.add_argument("--t-max", type=float, default=None, dest="t_max")
    p.add_argument("--points", type=int, default=400)
    p.add_argument("--coefficients", action="store_true")
    p.add_argument("--raw-units", action="store_true", dest="raw_units")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_etd)

    p = sub.add_parser("sample", help="sample an escape-time ensemble")
    p.add_argument("--model", default="ssh", choices=["ssh", "set", "feedback"])
    p.add_argument("--n", type=int, default=10)
    _add_rate_args(p, alpha_default=-0.5)
    p.add_argument("--feedback", default=None, help="JSON rates for the feedback model")
    p.add_argument("--set-leads", default=None, dest="set_leads", help="JSON lead parameters")
    p.add_argument("--generator", default=None,
                   help="serialized generator JSON; overrides the model flags")
    p.add_argument("--i-max", type=int, required=True, dest="i_max")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--initial", default="symmetric_edges")
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("reconstruct", help="integrated and differential curves from an ensemble")
    p.add_argument("--input", required=True)
    p.add_argument("--n-av", type=int, default=100, dest="n_av")
    p.add_argument("--n-step", type=int, default=500, dest="n_step")
    p.add_argument("--raw-units", action="store_true", dest="raw_units")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_reconstruct)

    p = sub.add_parser("fit", help="fit the cumulative exponential ansatz to a curve")
    p.add_argument("--input", required=True)
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--restarts", type=int, default=8)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-o", "--output", default="-")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("sweep-fit", help="full pipeline fit over a bias sweep")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--gamma-bar", type=float, default=1.0, dest="gamma_bar")
    p.add_argument("--alpha-min", type=float, required=True, dest="alpha_min")
    p.add_argument("--alpha-max", type=float, required=True, dest="alpha_max")
    p.add_argument("--steps", type=int, default=21)
    p.add_argument("--i-max", type=int, default=100_000, dest="i_max")
    p.add_argument("--seed", type=int, default=1)
    p.add_argument("--initial", default="symmetric_edges")
    p.add_argument("--n-av", type=int, default=100, dest="n_av")
    p.add_argument("--n-step", type=int, default=500, dest="n_step")
    p.add_argument("--k", type=int, default=3)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--raw-units", action="store_true", dest="raw_units")
    p.add_argument("-o", "--output", required=True)
    p.set_defaults(func=cmd_sweep_fit)

    for name, fn in (("reproduce-fig2", cmd_reproduce_fig2), ("reproduce-fig3", cmd_reproduce_fig3)):
        p = sub.add_parser(name, help=f"write the data behind {name.split('-')[1]}")
        p.add_argument("--config", default=None)
        p.add_argument("--n-sites", type=int, default=None, dest="n_sites")
        p.add_argument("--gamma-bar", type=float, default=None, dest="gamma_bar")
        p.add_argument("--alpha", type=float, default=None)
        p.add_argument("--alpha-min", type=float, default=None, dest="alpha_min")
        p.add_argument("--alpha-max", type=float, default=None, dest="alpha_max")
        p.add_argument("--steps", type=int, default=None)
        p.add_argument("--i-max", type=int, default=None, dest="i_max")
        p.add_argument("--seed", type=int, default=None)
        p.add_argument("--n-av", type=int, default=None, dest="n_av")
        p.add_argument("--n-step", type=int, default=None, dest="n_step")
        p.add_argument("--k-terms", type=int, default=None, dest="k_terms")
        p.add_argument("--threads", type=int, default=1)
        p.add_argument("--output-dir", default=None, dest="output_dir")
        p.set_defaults(func=fn)

    p = sub.add_parser("run", help="run a declarative pipeline config")
    p.add_argument("config")
    p.add_argument("--output-dir", default=None, dest="output_dir")
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_run)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (GapClosedError, InversionValidationError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:
        # parameter-domain violations from the library surface
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except RuntimeError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
