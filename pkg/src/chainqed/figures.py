"""Data behind the standard figures, with every unstated parameter pinned.

Each figure is a list of panels; a panel is a plain table in long format
(one row per curve point, curve keys as leading columns).  The choices
not fixed by the physics live in FIGURE_DEFAULTS and are echoed into every
output file so a table can always be traced back to its inputs.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import DriveConfig, EmitterParams, Geometry, coherent_scattering_amplitude, input_amplitude
from .ensemble import (antibragg_chain, bragg_chain, chain_factor, combined_chain,
                       effective_couplings, waveguide_chain)
from .grid import FrequencyGrid
from .observables import approx_g2_zero, g2_zero, psi_incoh_at_zero_unit
from .single_emitter import normalized_incoherent_freq

DEFAULTS_VERSION = "1"

FIGURE_DEFAULTS = {
    "fig2": {"beta": 0.01, "deltas": (0.0, 0.75, 1.5), "omega_max": 5.0, "omega_step": 0.01},
    "fig3": {"beta": 0.007, "deltas": (0.0, 1.0, 2.0), "n_max": 400},
    "fig4": {"betas": (0.005, 0.01, 0.02, 0.05), "od_step": 0.2, "od_max": 20.0},
    "fig5": {"beta": 0.01, "n_max": 100},
    "fig6": {"beta": 0.01, "n_values": (1, 10, 50, 100, 200, 500), "omega_max": 5.0,
             "omega_step": 0.01, "waveguide_search_max": 500},
    "fig7": {"beta": 0.01, "n_max": 200},
    "fig8": {"beta": 0.01, "ratio": 2.0, "n_max": 60},
    "fig9": {"cases": ((0.01, 2.0), (0.01, 10.0), (0.03, 5.0)), "n_max": 60,
             "baseline_beta": 0.01, "baseline_n_max": 300},
    "figB1": {"beta": 0.01, "deltas": (0.0, 1.0, 2.0), "n_max": 300},
}

FIGURE_IDS = tuple(FIGURE_DEFAULTS)

# unit reference drive; every tabulated quantity is a ratio or per unit drive**2
_DRIVE = 0.01


@dataclass
class Panel:
    name: str
    columns: list
    rows: list
    notes: dict = field(default_factory=dict)


def _omega_axis(cfg):
    k = int(round(cfg["omega_max"] / cfg["omega_step"]))
    return np.arange(-k, k + 1) * cfg["omega_step"]


def _zero_delay(responses, grid, workers):
    def one(r):
        return r.coh_unit, psi_incoh_at_zero_unit(r, grid), g2_zero(r, grid)

    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(one, responses))


def fig2(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig2"]
    omega = _omega_axis(cfg)
    rows = []
    for d in cfg["deltas"]:
        psi = normalized_incoherent_freq(EmitterParams(cfg["beta"], d), omega)
        rows += [(d, w, abs(v), v.real, v.imag) for w, v in zip(omega, psi)]
    cols = ["delta_over_gamma", "omega_over_gamma", "abs_psi", "re_psi", "im_psi"]
    return [Panel("fig2", cols, rows, {"psi_units": "per unit Omega^2"})]


def fig3(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig3"]
    rows = []
    for d in cfg["deltas"]:
        p = EmitterParams(cfg["beta"], d)
        a2 = input_amplitude(p, 1.0) ** 2
        ns = range(1, cfg["n_max"] + 1)
        res = _zero_delay([waveguide_chain(p, DriveConfig.waveguide(_DRIVE, n), grid) for n in ns],
                          grid, workers)
        for n, (coh, inc, g2) in zip(ns, res):
            coh, inc = coh / a2, inc / a2
            rows.append((d, n, coh.real, coh.imag, inc.real, inc.imag, g2))
    cols = ["delta_over_gamma", "n_emitters", "re_psi_coh", "im_psi_coh", "re_psi", "im_psi", "g2"]
    return [Panel("fig3", cols, rows, {"psi_units": "psi(tau=0) / alpha_in^2"})]


def fig4(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig4"]
    rows = []
    for b in cfg["betas"]:
        p = EmitterParams(b)
        a2 = input_amplitude(p, 1.0) ** 2
        ods = np.arange(1, int(round(cfg["od_max"] / cfg["od_step"])) + 1) * cfg["od_step"]
        ns = sorted({max(1, int(round(od / (4 * b)))) for od in ods})
        resp = [waveguide_chain(p, DriveConfig.waveguide(_DRIVE, n), grid) for n in ns]
        for n, (_, inc, _) in zip(ns, _zero_delay(resp, grid, workers)):
            rows.append((b, n, 4 * b * n, abs(inc / a2)))
    cols = ["beta", "n_emitters", "od", "abs_psi_norm"]
    return [Panel("fig4", cols, rows, {"psi_units": "|psi(tau=0)| / alpha_in^2"})]


def fig5(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig5"]
    p = EmitterParams(cfg["beta"])
    ns = range(1, cfg["n_max"] + 1)
    resp = [bragg_chain(p, DriveConfig.external(_DRIVE, n, Geometry.BRAGG), grid) for n in ns]
    rows = [(n, g2) for n, (_, _, g2) in zip(ns, _zero_delay(resp, grid, workers))]
    return [Panel("fig5", ["n_emitters", "g2"], rows)]


def fig6(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig6"]
    p = EmitterParams(cfg["beta"])
    omega = _omega_axis(cfg)
    sc2 = coherent_scattering_amplitude(p, 1.0) ** 2
    rows = []
    for n in cfg["n_values"]:
        r = antibragg_chain(p, DriveConfig.external(1.0, n, Geometry.ANTI_BRAGG), grid)
        rows += [(n, w, v) for w, v in zip(omega, np.abs(r.spectrum_unit(omega) / sc2))]
    plateau = 1.0 / (p.beta * (1.0 - p.beta))
    # waveguide chain at the N that maximizes its omega = 0 pair amplitude
    search = np.arange(1, cfg["waveguide_search_max"] + 1)
    at_zero = [abs(chain_factor(p, int(n), np.zeros(1))[0]) for n in search]
    n_star = int(search[int(np.argmax(at_zero))])
    wg = waveguide_chain(p, DriveConfig.waveguide(1.0, n_star), grid)
    # normalized to the first emitter's scattered amplitude for the same drive
    wg_rows = [(n_star, w, v) for w, v in zip(omega, np.abs(wg.spectrum_unit(omega) / sc2))]
    cols = ["n_emitters", "omega_over_gamma", "abs_psi_norm"]
    return [Panel("fig6_antibragg", cols, rows, {"plateau": plateau}),
            Panel("fig6_waveguide", cols, wg_rows, {"n_star": n_star})]


def fig7(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig7"]
    p = EmitterParams(cfg["beta"])
    sc2 = coherent_scattering_amplitude(p, 1.0) ** 2
    ns = list(range(1, cfg["n_max"] + 1))
    anti = _zero_delay([antibragg_chain(p, DriveConfig.external(_DRIVE, n, Geometry.ANTI_BRAGG), grid)
                        for n in ns], grid, workers)
    wg = _zero_delay([waveguide_chain(p, DriveConfig.waveguide(_DRIVE, n), grid) for n in ns],
                     grid, workers)
    br = _zero_delay([bragg_chain(p, DriveConfig.external(_DRIVE, n, Geometry.BRAGG), grid)
                      for n in ns], grid, workers)
    a_rows = [(n, abs(a[1] / sc2), abs(w[1] / sc2)) for n, a, w in zip(ns, anti, wg)]
    b_rows = [(n, a[2], w[2], b[2]) for n, a, w, b in zip(ns, anti, wg, br)]
    return [Panel("fig7_a", ["n_emitters", "abs_psi_norm_antibragg", "abs_psi_norm_waveguide"], a_rows),
            Panel("fig7_b", ["n_emitters", "g2_antibragg", "g2_waveguide", "g2_bragg"], b_rows)]


def fig8(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig8"]
    p = EmitterParams(cfg["beta"])
    ns = list(range(1, cfg["n_max"] + 1))
    resp = [combined_chain(p, DriveConfig.combined(_DRIVE, cfg["ratio"], n), grid) for n in ns]
    betas = effective_couplings(p, cfg["ratio"], cfg["n_max"])
    rows = [(n, g2, betas[n - 1]) for n, (_, _, g2) in zip(ns, _zero_delay(resp, grid, workers))]
    return [Panel("fig8", ["n_emitters", "g2", "beta_eff"], rows)]


def fig9(grid, workers=None):
    cfg = FIGURE_DEFAULTS["fig9"]
    rows = []
    base = EmitterParams(cfg["baseline_beta"])
    ns = list(range(1, cfg["baseline_n_max"] + 1))
    resp = [waveguide_chain(base, DriveConfig.waveguide(_DRIVE, n), grid) for n in ns]
    rows += [(base.beta, 0.0, n, g2) for n, (_, _, g2) in zip(ns, _zero_delay(resp, grid, workers))]
    for b, r in cfg["cases"]:
        p = EmitterParams(b)
        ns = list(range(1, cfg["n_max"] + 1))
        resp = [combined_chain(p, DriveConfig.combined(_DRIVE, r, n), grid) for n in ns]
        rows += [(b, r, n, g2) for n, (_, _, g2) in zip(ns, _zero_delay(resp, grid, workers))]
    return [Panel("fig9", ["beta", "ratio", "n_emitters", "g2"], rows)]


def figB1(grid, workers=None):
    cfg = FIGURE_DEFAULTS["figB1"]
    ns = list(range(1, cfg["n_max"] + 1))
    a_rows = []
    for d in cfg["deltas"]:
        p = EmitterParams(cfg["beta"], d)
        a2 = input_amplitude(p, 1.0) ** 2
        res = _zero_delay([waveguide_chain(p, DriveConfig.waveguide(_DRIVE, n), grid) for n in ns],
                          grid, workers)
        # optically thin limit: N copies of the single-emitter amplitude
        single = psi_incoh_at_zero_unit(waveguide_chain(p, DriveConfig.waveguide(_DRIVE, 1), grid), grid)
        for n, (_, inc, _) in zip(ns, res):
            v = inc / a2
            a_rows.append((d, n, v.real, v.imag, abs(v), abs(n * single / a2)))
    p = EmitterParams(cfg["beta"])
    a2 = input_amplitude(p, 1.0) ** 2
    res = _zero_delay([waveguide_chain(p, DriveConfig.waveguide(_DRIVE, n), grid) for n in ns],
                      grid, workers)
    b_rows = [(n, abs(coh / a2), abs(inc / a2), g2, approx_g2_zero(p, n))
              for n, (coh, inc, g2) in zip(ns, res)]
    return [Panel("figB1_a", ["delta_over_gamma", "n_emitters", "re_psi", "im_psi", "abs_psi_norm",
                              "abs_psi_norm_low_od"], a_rows, {"psi_units": "psi(tau=0) / alpha_in^2"}),
            Panel("figB1_b", ["n_emitters", "abs_psi_coh_norm", "abs_psi_norm", "g2", "g2_approx"],
                  b_rows)]


_BUILDERS = {"fig2": fig2, "fig3": fig3, "fig4": fig4, "fig5": fig5, "fig6": fig6, "fig7": fig7,
             "fig8": fig8, "fig9": fig9, "figB1": figB1}


def reproduce_figure(fig_id: str, grid: Optional[FrequencyGrid] = None,
                     workers: Optional[int] = None) -> list:
    if fig_id not in _BUILDERS:
        raise KeyError(f"unknown figure {fig_id!r}; choose from {', '.join(FIGURE_IDS)}")
    return _BUILDERS[fig_id](grid or FrequencyGrid(), workers)
