"""Command-line harness: validate experiment configs, run them, write CSVs.

Usage:
    patchkit run <config.json> [--out DIR] [--seed N] [--jobs N] [--max-wall S]
    patchkit validate <config.json>
    patchkit preset <name> [--out DIR]

Configs are one JSON object per experiment with a ``kind`` field; see
presets.py for the shipped examples.  Every run writes its CSV outputs
plus a run_manifest.json (resolved config, seeds, versions, wall time)
into the output directory.  Files are written to a temporary name and
renamed, so failures never leave partial outputs.

Exit codes: 0 success, 2 config/schema error, 3 numeric failure,
4 I/O error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__, analysis, manifold, md, pde, presets
from .errors import (AnalysisError, ConfigurationError, ConstructionError,
                     IntegrationError, RegionEmptyError)
from .geometry import MacroDomain, PatchGeometry

KINDS = ("isolated-md", "controlled-md", "heat-reference", "controlled-patch-pde",
         "multipatch-pde", "modes", "optimal-mu", "slow-manifold", "estimate-k")

MD_KINDS = ("isolated-md", "controlled-md", "estimate-k")


# --- validation ----------------------------------------------------------------

def _check_num(cfg, out, key, *, required=False, positive=False, integer=False,
               nonneg=False):
    if key not in cfg:
        if required:
            out.append(f"missing required field {key!r}")
        return None
    v = cfg[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        out.append(f"{key} must be a number, got {v!r}")
        return None
    if integer and int(v) != v:
        out.append(f"{key} must be an integer, got {v!r}")
    if positive and not v > 0:
        out.append(f"{key} must be positive, got {v}")
    if nonneg and v < 0:
        out.append(f"{key} must be >= 0, got {v}")
    return v


def validate_config(cfg: dict) -> list[str]:
    """Schema and physics sanity checks; returns a list of violations."""
    out: list[str] = []
    kind = cfg.get("kind")
    if kind not in KINDS:
        out.append(f"kind must be one of {', '.join(KINDS)}; got {kind!r}")
        return out

    if kind in MD_KINDS:
        _check_num(cfg, out, "N", required=True, positive=True, integer=True)
        _check_num(cfg, out, "tEnd", required=True, positive=True)
        _check_num(cfg, out, "side", positive=True)
        _check_num(cfg, out, "dt", positive=True)
        if "seed" not in cfg and not cfg.get("seeds"):
            out.append("MD experiments require a seed (or a seeds list)")
        if "seeds" in cfg and not (isinstance(cfg["seeds"], list)
                                   and all(isinstance(s, int) for s in cfg["seeds"])):
            out.append("seeds must be a list of integers")
        if kind in ("controlled-md", "estimate-k"):
            _check_num(cfg, out, "mu", required=True, positive=True)
            _check_num(cfg, out, "K", required=True, positive=True)
            for key in ("T_L", "T_R"):
                _check_num(cfg, out, key, required=True, positive=True)
            _check_num(cfg, out, "H", positive=True)

    if kind in ("heat-reference", "controlled-patch-pde", "multipatch-pde"):
        _check_num(cfg, out, "K", required=True, positive=True)
        n = _check_num(cfg, out, "n", required=True, positive=True, integer=True)
        if n is not None and (n < 8 or int(n) % 8 != 0):
            out.append(f"grid size n must be a multiple of 8 for region alignment, got {n}")
        dt = _check_num(cfg, out, "dt", positive=True)
        if kind == "heat-reference":
            H = _check_num(cfg, out, "H", required=True, positive=True)
            if None not in (dt, n, H) and cfg["K"] > 0:
                dx = 2.0 * H / int(n)
                if dt > pde.RK4_REAL_STABILITY * dx * dx / (4.0 * cfg["K"]):
                    out.append(f"dt={dt:g} violates the diffusive CFL bound "
                               f"{pde.RK4_REAL_STABILITY * dx * dx / (4.0 * cfg['K']):g}")
        else:
            _check_num(cfg, out, "mu", required=(kind == "controlled-patch-pde"), nonneg=True)
            h = _check_num(cfg, out, "h", positive=True) if kind == "controlled-patch-pde" \
                else None
            if kind == "multipatch-pde":
                r = _check_num(cfg, out, "r", required=True, positive=True)
                H = _check_num(cfg, out, "H", required=True, positive=True)
                _check_num(cfg, out, "M", required=True, positive=True, integer=True)
                if isinstance(cfg.get("M"), int) and cfg["M"] < 2:
                    out.append("multipatch experiments need M >= 2")
                if r is not None and r > 1:
                    out.append(f"scale ratio r must be <= 1, got {r}")
                h = r * H if None not in (r, H) else None
            else:
                H = _check_num(cfg, out, "H", required=True, positive=True)
                if h is not None and H is not None and h > H:
                    out.append(f"need h <= H, got h={h}, H={H}")
            if None not in (dt, n, h) and cfg["K"] > 0:
                try:
                    geom = PatchGeometry(h=h, H=cfg.get("H", h) or h)
                    probe = pde.ControlledPdeConfig(
                        K=cfg["K"], geometry=geom, n=int(cfg["n"]),
                        mu=cfg.get("mu", 0.0), dt=dt)
                    out.extend(probe.violations(dx=2.0 * h / int(cfg["n"])))
                except (ConfigurationError, ValueError) as exc:
                    out.append(str(exc))

    if kind == "modes":
        _check_num(cfg, out, "h", required=True, positive=True)
        _check_num(cfg, out, "mu", required=True, positive=True)
        _check_num(cfg, out, "count", positive=True, integer=True)
        r = _check_num(cfg, out, "r", nonneg=True)
        if r is not None and r > 1:
            out.append(f"scale ratio r must be <= 1, got {r}")

    if kind == "slow-manifold":
        _check_num(cfg, out, "K", required=True, positive=True)
        _check_num(cfg, out, "mu", required=True, positive=True)
        _check_num(cfg, out, "H", required=True, positive=True)
        r = _check_num(cfg, out, "r", required=True, positive=True)
        if r is not None and r > 1:
            out.append(f"scale ratio r must be <= 1, got {r}")

    return out


# --- output helpers --------------------------------------------------------------

def _atomic(path: str, write_fn):
    tmp = f"{path}.tmp"
    write_fn(tmp)
    os.replace(tmp, path)


def _write_text_atomic(path: str, text: str):
    def w(p):
        with open(p, "w") as f:
            f.write(text)
    _atomic(path, w)


def _progress(label: str):
    state = {"last": time.perf_counter()}

    def cb(t, t_end):
        now = time.perf_counter()
        if now - state["last"] >= 5.0:
            print(f"  {label}: t = {t:.2f} / {t_end:g}", file=sys.stderr, flush=True)
            state["last"] = now
    return cb


def _sim_config(cfg: dict, seed: int, controlled: bool) -> md.SimConfig:
    kwargs = dict(
        N=int(cfg["N"]), tEnd=float(cfg["tEnd"]), seed=seed,
        side=float(cfg["side"]) if "side" in cfg else None,
        dt=float(cfg.get("dt", 0.002)),
        record_dt=float(cfg.get("record_dt", 0.05)),
        method=cfg.get("method", "rk4"),
    )
    if controlled:
        kwargs.update(mu=float(cfg["mu"]), K=float(cfg["K"]),
                      T_L=float(cfg["T_L"]), T_R=float(cfg["T_R"]))
        if "H" in cfg:
            kwargs["H"] = float(cfg["H"])
    for key in ("force_cap", "dist_guard", "temp_floor"):
        if key in cfg:
            kwargs[key] = float(cfg[key])
    if "empty_region" in cfg:
        kwargs["empty_region"] = cfg["empty_region"]
    return md.SimConfig(**kwargs)


def _run_md_seed(cfg: dict, seed: int, out_dir: str, controlled: bool,
                 max_wall: float | None, tag: str):
    sim = _sim_config(cfg, seed, controlled)
    records = md.integrate(sim, progress=_progress(f"seed {seed}"), max_wall=max_wall)
    traj = os.path.join(out_dir, f"trajectory{tag}.csv")
    _atomic(traj, lambda p: md.write_trajectory_csv(records, p))
    snap = os.path.join(out_dir, f"snapshot{tag}.csv")
    _atomic(snap, lambda p: md.write_snapshot_csv(records[-1].state, sim, p))
    caps = int(sum(r.cap_events for r in records))
    if caps:
        print(f"  seed {seed}: {caps} force-cap activations logged at record times",
              file=sys.stderr)
    t = np.array([r.t for r in records])
    aux = np.array([r.aux for r in records])
    return [os.path.basename(traj), os.path.basename(snap)], t, aux, caps


# --- experiment runners -----------------------------------------------------------

def _run_isolated_md(cfg, out_dir, max_wall):
    seed = int(cfg["seed"])
    sim = _sim_config(cfg, seed, controlled=False)
    records = md.integrate(sim, keep_states=True,
                           progress=_progress(f"seed {seed}"), max_wall=max_wall)
    outputs = []
    traj = os.path.join(out_dir, "trajectory.csv")
    _atomic(traj, lambda p: md.write_trajectory_csv(records, p))
    outputs.append("trajectory.csv")

    lines = ["t,KE,PE,total"]
    for rec in records:
        ke, pe, tot = md.energies(rec.state, sim)
        lines.append(f"{rec.t:.17g},{ke:.17g},{pe:.17g},{tot:.17g}")
    _write_text_atomic(os.path.join(out_dir, "energy.csv"), "\n".join(lines) + "\n")
    outputs.append("energy.csv")

    _atomic(os.path.join(out_dir, "snapshot.csv"),
            lambda p: md.write_snapshot_csv(records[-1].state, sim, p))
    outputs.append("snapshot.csv")
    return outputs, {"seed": seed}


def _seeds_of(cfg, override):
    if override is not None:
        return [int(override)]
    if "seeds" in cfg:
        return [int(s) for s in cfg["seeds"]]
    return [int(cfg["seed"])]


def _run_controlled_md(cfg, out_dir, max_wall, jobs, seed_override):
    seeds = _seeds_of(cfg, seed_override)
    outputs = []
    gaps = {}
    if jobs > 1 and len(seeds) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = {ex.submit(_run_md_seed, cfg, s, out_dir, True, max_wall,
                              f"_seed{s}"): s for s in seeds}
            for fut in concurrent.futures.as_completed(futs):
                s = futs[fut]
                names, t, aux, _ = fut.result()
                outputs.extend(names)
                gaps[s] = _gap_stats(t, aux)
    else:
        for s in seeds:
            names, t, aux, _ = _run_md_seed(cfg, s, out_dir, True, max_wall, f"_seed{s}")
            outputs.extend(names)
            gaps[s] = _gap_stats(t, aux)
    return sorted(outputs), {"seeds": seeds,
                             "gap_stats": {str(s): gaps[s] for s in seeds}}


def _gap_stats(t, aux):
    sel = t >= min(10.0, 0.5 * t[-1])
    return {"mean_Tr_minus_Tl": float((aux[sel, 2] - aux[sel, 0]).mean()),
            "mean_Tc_last_sixth": float(aux[t >= t[-1] * 5 / 6, 1].mean())}


def _run_heat_reference(cfg, out_dir):
    K, H, n = float(cfg["K"]), float(cfg["H"]), int(cfg["n"])
    T_L, T_R = float(cfg.get("T_L", 1.0)), float(cfg.get("T_R", 1.0))
    eps = float(cfg.get("perturbation", 0.0))
    geom = PatchGeometry(h=H, H=H)
    pcfg = pde.ControlledPdeConfig(K=K, geometry=geom, n=n,
                                   dt=float(cfg["dt"]) if "dt" in cfg else None)
    k1 = math.pi / (2.0 * H)

    def ramp(x):
        return T_L + (x + H) * (T_R - T_L) / (2.0 * H)

    def ic(x):
        return ramp(x) + eps * math.sin(k1 * (x + H))

    fields = pde.solve_heat_reference(pcfg, T_L, T_R, ic, float(cfg["tEnd"]),
                                      float(cfg.get("record_dt", cfg["tEnd"])))
    outputs = []
    for tag, fld in (("initial", fields[0]), ("final", fields[-1])):
        name = f"field_{tag}.csv"
        _atomic(os.path.join(out_dir, name), lambda p, f=fld: pde.write_field_csv(f, p))
        outputs.append(name)
    lines = ["t,max_perturbation"]
    for fld in fields:
        pert = float(np.abs(fld.values - np.array([ramp(x) for x in fld.x])).max())
        lines.append(f"{fld.t:.17g},{pert:.17g}")
    _write_text_atomic(os.path.join(out_dir, "decay.csv"), "\n".join(lines) + "\n")
    outputs.append("decay.csv")
    return outputs, {"gravest_rate_expected": K * math.pi ** 2 / (4.0 * H * H)}


def _run_controlled_patch_pde(cfg, out_dir):
    K, h, H, n = float(cfg["K"]), float(cfg["h"]), float(cfg["H"]), int(cfg["n"])
    mu = float(cfg["mu"])
    T_L, T_R = float(cfg["T_L"]), float(cfg["T_R"])
    geom = PatchGeometry(h=h, H=H)
    pcfg = pde.ControlledPdeConfig(K=K, geometry=geom, n=n, mu=mu,
                                   dt=float(cfg["dt"]) if "dt" in cfg else None)
    outputs = []
    info = {}
    if cfg.get("steady_state", False):
        ss = pde.controlled_patch_steady_state(pcfg, T_L, T_R)
        exact = pde.equilibrium_profile(ss.x, mu, T_L, T_R, h, H)
        lines = ["x,value,closed_form"]
        for x, v, e in zip(ss.x, ss.values, exact):
            lines.append(f"{x:.17g},{v:.17g},{e:.17g}")
        _write_text_atomic(os.path.join(out_dir, "equilibrium.csv"), "\n".join(lines) + "\n")
        outputs.append("equilibrium.csv")
        info["max_abs_error_vs_closed_form"] = float(np.abs(ss.values - exact).max())
        sc = slice(3 * n // 8, 5 * n // 8)
        info["core_average"] = float(ss.values[sc].mean())
    else:
        ic = lambda x: 0.5 * (T_L + T_R)
        fields = pde.solve_controlled_patch_pde(pcfg, T_L, T_R, ic, float(cfg["tEnd"]),
                                                float(cfg.get("record_dt", cfg["tEnd"])))
        _atomic(os.path.join(out_dir, "field_final.csv"),
                lambda p: pde.write_field_csv(fields[-1], p))
        outputs.append("field_final.csv")
    return outputs, info


def _run_multipatch(cfg, out_dir):
    K, alpha, mu = float(cfg["K"]), float(cfg.get("alpha", 0.0)), float(cfg["mu"])
    gamma, r, H = float(cfg.get("gamma", 1.0)), float(cfg["r"]), float(cfg["H"])
    M, n = int(cfg["M"]), int(cfg["n"])
    mode = int(cfg.get("mode_index", 1))
    geom = PatchGeometry(h=r * H, H=H)
    dom = MacroDomain(kind="periodic-multi-patch", H=H, M=M)
    pcfg = pde.ControlledPdeConfig(K=K, geometry=geom, n=n, alpha=alpha, mu=mu,
                                   gamma=gamma, domain=dom,
                                   dt=float(cfg["dt"]) if "dt" in cfg else None,
                                   interp_order=int(cfg.get("interp_order", 1)))

    def ic(j, x):
        return np.full_like(x, math.cos(2.0 * math.pi * mode * j / M))

    res = pde.solve_multipatch_pde(pcfg, ic, float(cfg["tEnd"]),
                                   float(cfg.get("record_dt", cfg["tEnd"])))
    outputs = []
    _atomic(os.path.join(out_dir, "amplitudes.csv"),
            lambda p: pde.write_amplitudes_csv(res.times, res.U, p))
    outputs.append("amplitudes.csv")
    for j, fld in enumerate(res.grid_fields()):
        name = f"field_patch{j + 1}.csv"
        _atomic(os.path.join(out_dir, name), lambda p, f=fld: pde.write_field_csv(f, p))
        outputs.append(name)
    amps = (res.U * np.exp(-2j * np.pi * mode * np.arange(M) / M)).sum(axis=1) / M
    lines = ["t,mode_abs,mode_phase"]
    for t, a in zip(res.times, amps):
        lines.append(f"{t:.17g},{abs(a):.17g},{np.angle(a):.17g}")
    _write_text_atomic(os.path.join(out_dir, "mode_history.csv"), "\n".join(lines) + "\n")
    outputs.append("mode_history.csv")
    kappa = 2.0 * math.pi * mode / M
    info = {"continuum_rate": K * (kappa / H) ** 2,
            "stencil_rate": 2.0 * (1.0 - math.cos(kappa)) * 3.0 * K
            / (H * H * (1.0 + 48.0 / mu))}
    return outputs, info


def _run_modes(cfg, out_dir):
    h, mu = float(cfg["h"]), float(cfg["mu"])
    r = float(cfg.get("r", 0.0))
    K = float(cfg.get("K", 1.0))
    count = int(cfg.get("count", 8))
    roots = analysis.find_mode_roots(analysis.SYMMETRIC, h=h, mu=mu, count=count, r=r, K=K)
    roots += analysis.find_mode_roots(analysis.ANTISYMMETRIC, h=h, mu=mu, count=count, K=K)
    _atomic(os.path.join(out_dir, "modes.csv"),
            lambda p: analysis.write_modes_csv(roots, p))
    return ["modes.csv"], {"count_per_class": count}


def _run_optimal_mu(cfg, out_dir):
    single = analysis.optimal_mu_single_patch()
    adv, diff = analysis.optimal_mu_multipatch()
    print(f"optimal mu (single patch, gravest-mode match): {single:.6g}")
    print(f"  1/mu = {1.0 / single:.6g}")
    print(f"optimal mu (multi-patch advection): {adv:.6f}")
    print(f"optimal mu (multi-patch diffusion): {diff:.6g}")
    text = ("quantity,value\n"
            f"mu_single_patch,{single:.17g}\n"
            f"one_over_mu_single_patch,{1.0 / single:.17g}\n"
            f"mu_multipatch_advection,{adv:.17g}\n"
            f"mu_multipatch_diffusion,{diff:.17g}\n")
    _write_text_atomic(os.path.join(out_dir, "optimal_mu.csv"), text)
    return ["optimal_mu.csv"], {"mu_single": single, "mu_advection": adv,
                                "mu_diffusion": diff}


def _run_slow_manifold(cfg, out_dir):
    field, stencil = manifold.construct_slow_manifold(
        alpha=float(cfg.get("alpha", 0.0)), K=float(cfg["K"]), mu=float(cfg["mu"]),
        r=float(cfg["r"]), H=float(cfg["H"]))
    _atomic(os.path.join(out_dir, "slow_manifold_coeffs.csv"),
            lambda p: manifold.write_manifold_coeffs_csv(field, stencil, p))
    _atomic(os.path.join(out_dir, "slow_manifold_fields.csv"),
            lambda p: manifold.write_manifold_samples_csv(field, p))
    adv, diff = manifold.equivalent_pde(stencil)
    return (["slow_manifold_coeffs.csv", "slow_manifold_fields.csv"],
            {"a_adv": stencil.a_adv, "a_diff": stencil.a_diff,
             "equivalent_advection_per_alpha": adv, "equivalent_diffusion_per_K": diff})


def _run_estimate_k(cfg, out_dir, max_wall, jobs, seed_override):
    seeds = _seeds_of(cfg, seed_override)
    outputs = []
    all_aux = []
    tgrid = None
    if jobs > 1 and len(seeds) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as ex:
            futs = {ex.submit(_run_md_seed, cfg, s, out_dir, True, max_wall,
                              f"_seed{s}"): s for s in seeds}
            results = {futs[f]: f.result() for f in concurrent.futures.as_completed(futs)}
        for s in seeds:
            names, t, aux, _ = results[s]
            outputs.extend(names)
            tgrid = t
            all_aux.append(aux)
    else:
        for s in seeds:
            names, t, aux, _ = _run_md_seed(cfg, s, out_dir, True, max_wall, f"_seed{s}")
            outputs.extend(names)
            tgrid = t
            all_aux.append(aux)
    aux_mean = np.mean(all_aux, axis=0)
    delta = aux_mean[:, 2] - aux_mean[:, 0]  # Tr - Tl, ensemble mean
    K_est, lam, k3, d_inf = analysis.estimate_diffusivity_from_transient(
        tgrid, delta, h=float(cfg["side"]) / 2.0, mu=float(cfg["mu"]))
    lines = ["t,delta_mean"]
    for t, v in zip(tgrid, delta):
        lines.append(f"{t:.17g},{v:.17g}")
    _write_text_atomic(os.path.join(out_dir, "transient.csv"), "\n".join(lines) + "\n")
    outputs.append("transient.csv")
    h = float(cfg["side"]) / 2.0
    print(f"estimated diffusivity K = {K_est:.4g} "
          f"(fit rate {lam:.4g}, k3 = {k3:.4g}, gap {d_inf:.4g}); "
          f"size heuristic gives {analysis.estimate_diffusivity(h):.4g}")
    return sorted(outputs), {"seeds": seeds, "K_estimate": float(K_est),
                             "fit_rate": float(lam), "k3": float(k3),
                             "heuristic_K": analysis.estimate_diffusivity(h)}


# --- commands ---------------------------------------------------------------------

def cmd_run(args) -> int:
    try:
        with open(args.config) as f:
            cfg = json.load(f)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 4
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 2

    problems = validate_config(cfg)
    if problems:
        for p in problems:
            print(f"config error: {p}", file=sys.stderr)
        return 2

    out_dir = args.out or cfg.get("out_dir") or "."
    t0 = time.perf_counter()
    try:
        os.makedirs(out_dir, exist_ok=True)
        kind = cfg["kind"]
        if kind == "isolated-md":
            if args.seed is not None:
                cfg["seed"] = int(args.seed)
            outputs, info = _run_isolated_md(cfg, out_dir, args.max_wall)
        elif kind == "controlled-md":
            outputs, info = _run_controlled_md(cfg, out_dir, args.max_wall,
                                               args.jobs, args.seed)
        elif kind == "heat-reference":
            outputs, info = _run_heat_reference(cfg, out_dir)
        elif kind == "controlled-patch-pde":
            outputs, info = _run_controlled_patch_pde(cfg, out_dir)
        elif kind == "multipatch-pde":
            outputs, info = _run_multipatch(cfg, out_dir)
        elif kind == "modes":
            outputs, info = _run_modes(cfg, out_dir)
        elif kind == "optimal-mu":
            outputs, info = _run_optimal_mu(cfg, out_dir)
        elif kind == "slow-manifold":
            outputs, info = _run_slow_manifold(cfg, out_dir)
        elif kind == "estimate-k":
            outputs, info = _run_estimate_k(cfg, out_dir, args.max_wall,
                                            args.jobs, args.seed)
    except ConfigurationError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except (IntegrationError, RegionEmptyError, AnalysisError, ConstructionError,
            FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numeric failure: {exc}", file=sys.stderr)
        return 3
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4

    manifest = {
        "experiment": cfg["kind"],
        "config": cfg,
        "cli_overrides": {k: getattr(args, k) for k in ("seed", "jobs", "max_wall")
                          if getattr(args, k) not in (None, 1)},
        "outputs": outputs,
        "info": info,
        "versions": {"patchkit": __version__, "numpy": np.__version__,
                     "python": sys.version.split()[0]},
        "wall_seconds": round(time.perf_counter() - t0, 3),
    }
    try:
        _write_text_atomic(os.path.join(out_dir, "run_manifest.json"),
                           json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    print(f"wrote {len(outputs)} output file(s) to {out_dir}")
    return 0


def cmd_validate(args) -> int:
    try:
        with open(args.config) as f:
            cfg = json.load(f)
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 4
    except json.JSONDecodeError as exc:
        print(f"config is not valid JSON: {exc}", file=sys.stderr)
        return 2
    problems = validate_config(cfg)
    if problems:
        for p in problems:
            print(f"violation: {p}")
        return 2
    print("ok")
    return 0


def cmd_preset(args) -> int:
    try:
        cfg = presets.preset(args.name)
    except KeyError as exc:
        print(exc.args[0], file=sys.stderr)
        return 2
    out_dir = args.out or "."
    try:
        os.makedirs(out_dir, exist_ok=True)
        path = os.path.join(out_dir, f"{args.name}.json")
        _write_text_atomic(path, json.dumps(cfg, indent=2, sort_keys=True) + "\n")
    except OSError as exc:
        print(f"i/o failure: {exc}", file=sys.stderr)
        return 4
    print(path)
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="patchkit",
        description="Controlled periodic-patch multiscale experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run an experiment config")
    p_run.add_argument("config")
    p_run.add_argument("--out", help="output directory (default: config out_dir or .)")
    p_run.add_argument("--seed", type=int, help="override the config seed")
    p_run.add_argument("--jobs", type=int, default=1,
                       help="parallel workers for multi-seed experiments")
    p_run.add_argument("--max-wall", type=float, dest="max_wall",
                       help="abort MD integration after this many wall seconds")
    p_run.set_defaults(fn=cmd_run)

    p_val = sub.add_parser("validate", help="check a config without running")
    p_val.add_argument("config")
    p_val.set_defaults(fn=cmd_validate)

    p_pre = sub.add_parser("preset", help="write a named preset config")
    p_pre.add_argument("name")
    p_pre.add_argument("--out", help="directory for the JSON file")
    p_pre.set_defaults(fn=cmd_preset)

    args = parser.parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
