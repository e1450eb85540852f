"""Named experiment configurations reproducing the reference figures
at desk scale.  ``patchkit preset <name> --out DIR`` materializes one of
these as a JSON file for ``patchkit run``."""

from __future__ import annotations

import copy

PRESETS: dict[str, dict] = {
    # isolated 64-atom patch, energy/momentum conservation check
    "fig2": {
        "kind": "isolated-md",
        "N": 64,
        "side": 4.0,
        "tEnd": 3.0,
        "dt": 0.002,
        "record_dt": 0.02,
        "seed": 1,
    },
    # controlled 343-atom patch against sidewalls at +-7, mu = 30
    "fig5": {
        "kind": "controlled-md",
        "N": 343,
        "side": 7.0,
        "H": 7.0,
        "mu": 30.0,
        "K": 0.5,
        "T_L": 0.5,
        "T_R": 1.5,
        "tEnd": 60.0,
        "dt": 0.002,
        "record_dt": 0.05,
        "seeds": [1, 2, 3],
    },
    # same scenario with weak control mu = 3 (transient-decay study)
    "fig8": {
        "kind": "controlled-md",
        "N": 343,
        "side": 7.0,
        "H": 7.0,
        "mu": 3.0,
        "K": 0.5,
        "T_L": 0.5,
        "T_R": 1.5,
        "tEnd": 20.0,
        "dt": 0.002,
        "record_dt": 0.05,
        "seeds": [1, 2, 3, 4],
    },
    # slow-manifold basis fields of the advected, controlled patch
    "fig10": {
        "kind": "slow-manifold",
        "alpha": 1.0,
        "K": 1.0,
        "mu": 30.0,
        "r": 1.0,
        "H": 1.0,
    },
    # characteristic-equation roots at the reference control strength
    "modes": {
        "kind": "modes",
        "h": 3.5,
        "r": 0.64,
        "mu": 34.67,
        "K": 0.5,
        "count": 10,
    },
    # calibrated control strengths
    "optimal-mu": {
        "kind": "optimal-mu",
    },
    # reference heat equation with the gravest-mode perturbation
    "heat-reference": {
        "kind": "heat-reference",
        "K": 0.5,
        "H": 7.0,
        "n": 512,
        "T_L": 0.5,
        "T_R": 1.5,
        "perturbation": 0.1,
        "tEnd": 8.0,
        "record_dt": 0.5,
    },
    # controlled single-patch diffusion: steady state vs closed form
    "patch-equilibrium": {
        "kind": "controlled-patch-pde",
        "K": 0.5,
        "h": 3.5,
        "H": 7.0,
        "n": 1024,
        "mu": 12.0,
        "T_L": 0.5,
        "T_R": 1.5,
        "steady_state": True,
    },
    # eight coupled patches, diffusion-calibrated control
    "multipatch-decay": {
        "kind": "multipatch-pde",
        "K": 1.0,
        "alpha": 0.0,
        "mu": 24.0,
        "gamma": 1.0,
        "r": 0.5,
        "H": 1.0,
        "M": 8,
        "n": 48,
        "tEnd": 3.0,
        "record_dt": 0.1,
        "mode_index": 1,
    },
    # MD transient-decay estimate of the microscale diffusivity (mu = 3)
    "estimate-k": {
        "kind": "estimate-k",
        "N": 343,
        "side": 7.0,
        "H": 7.0,
        "mu": 3.0,
        "K": 0.5,
        "T_L": 0.5,
        "T_R": 1.5,
        "tEnd": 8.0,
        "dt": 0.002,
        "record_dt": 0.05,
        "seeds": [1, 2, 3, 4],
    },
}


def preset(name: str) -> dict:
    if name not in PRESETS:
        raise KeyError(f"unknown preset {name!r}; available: {', '.join(sorted(PRESETS))}")
    return copy.deepcopy(PRESETS[name])
