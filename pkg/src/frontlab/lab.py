"""End-to-end homogenization experiments and the report pipeline.

The finite surrogate for "one realization, epsilon -> 0": a master
periodic sample at unit-cube resolution; each epsilon sees the nested
prefix crop of 1/epsilon cubes, re-periodized, on the fixed physical box
[0,1]^2.  Effective inputs (Wulff set / Hamiltonian) come from a separate
ensemble at larger fast boxes.
"""

import math
import os
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import gridio
from .averaging import estimate_mbar
from .effective import EffectiveHamiltonian, effective_from_mbar, wulff_set
from .errors import ConfigurationError, StageError
from .evolution import (EvolutionConfig, solve_effective_hopflax,
                        solve_oscillatory, solve_stationary, u0_bump, u0_cone)
from .media import (crop_sample, gen_ball_obstacles, gen_checkerboard,
                    gen_poisson_cloud, gen_site_percolation)
from .topology import estimate_theta, label_components, ray_gap_statistics

# versioned test-function bank: Gaussian bumps, 3 centers x 2 widths
TESTFN_CENTERS = ((0.35, 0.45), (0.55, 0.62), (0.68, 0.38))
TESTFN_WIDTHS = (0.06, 0.12)


def test_function_bank(box=1.0):
    """The fixed bank of smooth pairing functions on the physical box."""
    bank = []
    for cx, cy in TESTFN_CENTERS:
        for w in TESTFN_WIDTHS:
            def phi(X, Y, cx=cx * box, cy=cy * box, w=w * box):
                return np.exp(-0.5 * ((X - cx) ** 2 + (Y - cy) ** 2) / w ** 2)
            bank.append(phi)
    return bank


def make_initial_data(name, box=1.0, width=0.15):
    center = (0.5 * box, 0.5 * box)
    if name == "cone":
        return u0_cone(center)
    if name == "bump":
        return u0_bump(center, width * box)
    raise ConfigurationError(f"unknown initial data {name!r}")


def generate_medium(spec, seed):
    """Build one sample from a [medium] config section."""
    kind = spec["kind"]
    cells = spec["cells_per_unit"]
    units = spec["units"]
    periodic = spec["periodic"]
    cell_h = 1.0 / cells
    n = units * cells
    if kind == "site_percolation":
        return gen_site_percolation(spec["p"], n, cell_h, seed,
                                    periodic=periodic)
    if kind == "checkerboard":
        return gen_checkerboard(spec["period"], n, cell_h, periodic=periodic)
    if kind == "ball_obstacles":
        return gen_ball_obstacles(spec["p_ball"], spec["radius"], units,
                                  cell_h, seed, periodic=periodic)
    if kind == "poisson_cloud":
        return gen_poisson_cloud(spec["intensity"], spec["radius"],
                                 float(units), cell_h, seed)
    raise ConfigurationError(f"unknown medium kind {kind!r}")


def nested_crop(master, epsilon, periodic=True):
    """Prefix crop of 1/epsilon unit cubes (physical box becomes [0,1]^2)."""
    cells_per_unit = int(round(1.0 / master.cell_h))
    units = 1.0 / epsilon
    if abs(units - round(units)) > 1e-9:
        raise ConfigurationError(f"1/epsilon={units} is not a whole number "
                                 "of unit cubes")
    n = int(round(units)) * cells_per_unit
    if n > master.grid_size:
        raise ConfigurationError(
            f"epsilon={epsilon} needs {n} cells, master has {master.grid_size}")
    return crop_sample(master, n, periodic=periodic)


def blend_profile(theta_span, u_span_values, u0_values):
    """Theta-weighted limit profile: all bounded components contribute u0."""
    return (1.0 - theta_span) * u0_values + theta_span * u_span_values


@dataclass
class ConvergenceReport:
    epsilons: tuple
    local_uniform: dict = field(default_factory=dict)
    liminf_statistic: dict = field(default_factory=dict)
    weak_pairings: dict = field(default_factory=dict)
    stationary_sup: dict = field(default_factory=dict)
    thetas: dict = field(default_factory=dict)
    verdicts: dict = field(default_factory=dict)

    def verdict_all(self):
        return all(self.verdicts.values()) if self.verdicts else False


def _sample_times(T, count):
    return [T * (k + 1) / count for k in range(count)]


def local_uniform_test(master, h_eff, u0, epsilons, delta, T, R_frac=0.35,
                       n_times=3, boundary="periodic", cfl=0.45):
    """Per-epsilon sup error on the delta-interiors against the effective
    solutions, plus the one-sided statistic on the full components.

    The spanning positive component homogenizes with h_eff; every bounded
    component has zero Hamiltonian, so its limit is the initial data.
    Returns (errors, liminf_stats, thetas) keyed by epsilon.
    """
    cfg = EvolutionConfig(cfl_target=cfl, boundary=boundary, T=T)
    times = _sample_times(T, n_times)
    errors = {}
    liminf_stats = {}
    thetas = {}
    for eps in sorted(epsilons, reverse=True):
        crop = nested_crop(master, eps, periodic=(boundary == "periodic"))
        labeling = label_components(crop)
        sid = labeling.spanning_id("+")
        snaps = solve_oscillatory(crop, u0, eps, cfg, sample_times=times)
        box = crop.grid_size * snaps[0].h
        X, Y = snaps[0].grid()
        ball = np.hypot(X - box / 2, Y - box / 2) <= R_frac * box
        u0_vals = np.asarray(u0(X, Y), dtype=float)

        sup_span = 0.0
        sup_bounded = 0.0
        one_sided = np.inf
        for snap in snaps:
            for cid in labeling.ids():
                part = (labeling.labels == cid) & (labeling.abs_a > delta) \
                    & ball
                if not part.any():
                    continue
                if cid == sid:
                    ubar = solve_effective_hopflax(
                        h_eff, u0, snap.t, crop.grid_size, box).values
                    sup_span = max(sup_span,
                                   float(np.abs(snap.values - ubar)[part].max()))
                    whole = (labeling.labels == cid) & ball
                    one_sided = min(one_sided, float(
                        (snap.values - ubar)[whole].min()))
                else:
                    sup_bounded = max(sup_bounded, float(
                        np.abs(snap.values - u0_vals)[part].max()))
        errors[eps] = {"spanning": sup_span if sid is not None else math.nan,
                       "bounded": sup_bounded}
        liminf_stats[eps] = one_sided if sid is not None else math.nan
        thetas[eps] = estimate_theta(labeling)
    return errors, liminf_stats, thetas


def weak_star_test(masters, h_eff, u0, epsilons, T, testfns=None, n_times=3,
                   boundary="periodic", cfl=0.45, theta_floor=0.0):
    """Ensemble-averaged weak pairings |<u_eps - ubar, phi>| per epsilon.

    ubar blends u0 (zero layer and bounded components) with the effective
    evolution of the spanning component, weighted by the per-sample
    volume fractions.
    """
    cfg = EvolutionConfig(cfl_target=cfl, boundary=boundary, T=T)
    times = _sample_times(T, n_times)
    if testfns is None:
        testfns = test_function_bank()
    pairings = {k: {eps: [] for eps in epsilons} for k in range(len(testfns))}
    dropped_spanning = 0.0

    for master in masters:
        for eps in epsilons:
            crop = nested_crop(master, eps, periodic=(boundary == "periodic"))
            labeling = label_components(crop)
            vf = estimate_theta(labeling)
            sid = labeling.spanning_id("+")
            theta_span = vf.theta.get(sid, 0.0) if sid is not None else 0.0
            for cid, th in vf.theta.items():
                if cid != sid and labeling.spanning[cid] and th > theta_floor:
                    dropped_spanning += th
            snaps = solve_oscillatory(crop, u0, eps, cfg, sample_times=times)
            h = snaps[0].h
            box = crop.grid_size * h
            X, Y = snaps[0].grid()
            u0_vals = np.asarray(u0(X, Y), dtype=float)
            phis = [phi(X, Y) for phi in testfns]
            # trapezoid over {0, t_1, ..., T}; the t=0 term vanishes
            wts = np.full(len(times), T / n_times)
            wts[-1] *= 0.5
            for k, phi_vals in enumerate(phis):
                acc = 0.0
                for snap, wt in zip(snaps, wts):
                    ubar_span = solve_effective_hopflax(
                        h_eff, u0, snap.t, crop.grid_size, box).values \
                        if sid is not None else u0_vals
                    ubar = blend_profile(theta_span, ubar_span, u0_vals)
                    acc += wt * float(((snap.values - ubar) * phi_vals).sum()) \
                        * h * h
                pairings[k][eps].append(acc)

    if dropped_spanning > 0.05:
        warnings.warn(f"spanning components totalling theta="
                      f"{dropped_spanning:.3f} not modelled", UserWarning)
    return {k: {eps: abs(float(np.mean(v))) for eps, v in per_eps.items()}
            for k, per_eps in pairings.items()}


def stationary_test(master, h_eff, p_list, epsilons, delta, boundary="periodic",
                    cfl=0.45, tol=1e-8):
    """Sup of |w_eps + H(p)| over the spanning delta-interior, per epsilon."""
    cfg = EvolutionConfig(cfl_target=cfl, boundary=boundary, T=1.0)
    out = {}
    for p in p_list:
        hp = h_eff.value(p)
        sups = {}
        for eps in sorted(epsilons, reverse=True):
            crop = nested_crop(master, eps, periodic=(boundary == "periodic"))
            labeling = label_components(crop)
            sid = labeling.spanning_id("+")
            if sid is None:
                sups[eps] = math.nan
                continue
            gf = solve_stationary(crop, p, eps, cfg, tol=tol)
            mask = (labeling.labels == sid) & (labeling.abs_a > delta)
            sups[eps] = float(np.abs(gf.values[mask] + hp).max())
        out[tuple(np.round(p, 12))] = sups
    return out


def _decreasing(values):
    vals = [v for v in values if not math.isnan(v)]
    return all(a > b for a, b in zip(vals, vals[1:])) and len(vals) >= 2


P_NAMES = {"e1": (1.0, 0.0), "e2": (0.0, 1.0),
           "diag": (math.sqrt(0.5), math.sqrt(0.5))}


def run_experiment(cfg, out_dir, threads=1):
    """Execute the configured pipeline and write all artifacts.

    Stages: generate -> label -> gaps -> average -> effective -> evolve
    (local uniform + weak-*) -> stationary (optional) -> summary.  Any
    stage failure raises StageError; artifacts written so far remain.
    """
    os.makedirs(out_dir, exist_ok=True)
    medium = cfg["medium"]
    seeds = [cfg["ensemble"]["seed0"] + k
             for k in range(cfg["ensemble"]["count"])]
    epsilons = tuple(sorted(cfg["evolution"]["epsilons"], reverse=True))
    report = ConvergenceReport(epsilons=epsilons)

    def stage(name, fn):
        try:
            return fn()
        except Exception as exc:
            raise StageError(name, str(exc)) from exc

    masters = stage("generate",
                    lambda: [generate_medium(medium, s) for s in seeds])
    if cfg["output"]["grids"]:
        gridio.write_grid(os.path.join(out_dir, "env_seed0.fhl"),
                          masters[0].a_field, masters[0].cell_h)
        gridio.write_metadata(
            os.path.join(out_dir, "env_seed0.meta.csv"),
            sorted({"kind": masters[0].kind, "seed": masters[0].seed,
                    **{f"param_{k}": v
                       for k, v in masters[0].params.items()}}.items()))

    def do_label():
        labeling = label_components(masters[0])
        rows = [(cid, "+" if cid > 0 else "-", labeling.sizes[cid],
                 int(labeling.spanning[cid])) for cid in labeling.ids()]
        gridio.write_csv(os.path.join(out_dir, "components.csv"),
                         ["id", "sign", "size", "spanning"], rows)
        vf = estimate_theta(labeling)
        gridio.write_csv(os.path.join(out_dir, "theta.csv"),
                         ["id", "cells", "theta"],
                         [(0, vf.zero_count, vf.theta0)]
                         + [(cid, vf.counts[cid], vf.theta[cid])
                            for cid in sorted(vf.counts)])
        return labeling

    labeling0 = stage("label", do_label)
    spanning_exists = labeling0.spanning_id("+") is not None

    def do_gaps():
        if not spanning_exists:
            return
        rows = []
        for d_idx, ang in enumerate(np.linspace(0, np.pi / 2, 5)):
            direction = (math.cos(ang), math.sin(ang))
            gs = ray_gap_statistics(labeling0, masters[0], direction,
                                    cfg["metric"]["delta"])
            for j, (s, t) in enumerate(gs.gaps):
                rows.append((d_idx, j, s, t, s / t if t > 0 else math.nan,
                             int(gs.truncated and j == len(gs.gaps) - 1)))
        gridio.write_csv(os.path.join(out_dir, "gaps.csv"),
                         ["direction", "j", "s", "t", "ratio", "truncated"],
                         rows)

    stage("gaps", do_gaps)

    def do_average():
        if not spanning_exists:
            return None
        m = cfg["metric"]
        envs = [generate_medium(
            {**medium, "units": m["units"],
             "cells_per_unit": m["cells_per_unit"], "periodic": False},
            m["seed0"] + k) for k in range(m["count"])]
        avg = estimate_mbar(envs, delta=m["delta"], directions=m["directions"],
                            t_grid=m["t_grid"], mu=m["mu"], eta=m["eta"],
                            method=m["method"],
                            check_delta0=m["check_delta0"])
        ang = np.degrees(np.arctan2(avg.directions[:, 1], avg.directions[:, 0]))
        gridio.write_csv(
            os.path.join(out_dir, "mbar.csv"),
            ["angle_deg", "mbar1", "ci", "mbar1_half_delta", "samples"],
            [(ang[d], avg.mbar1[d], avg.ci[d],
              avg.mbar1_half[d] if avg.mbar1_half is not None else math.nan,
              avg.samples) for d in range(len(ang))])
        return avg

    avg = stage("average", do_average)

    def do_effective():
        if avg is None:
            return EffectiveHamiltonian.zero()
        h_eff = effective_from_mbar(avg)
        ws = wulff_set(h_eff)
        gridio.write_csv(os.path.join(out_dir, "wulff.csv"),
                         ["vx", "vy"], [tuple(v) for v in ws.vertices])
        angles = np.linspace(0, 2 * np.pi, 73)[:-1]
        gridio.write_csv(
            os.path.join(out_dir, "effective_h.csv"), ["angle_deg", "H"],
            [(math.degrees(a),
              h_eff.value((math.cos(a), math.sin(a)))) for a in angles])
        return h_eff

    h_eff = stage("effective", do_effective)

    def do_evolve():
        u0 = make_initial_data(cfg["evolution"]["u0"],
                               width=cfg["evolution"]["u0_width"])
        delta = cfg["evolution"]["delta"]
        T = cfg["evolution"]["T"]
        errors, liminf, thetas = local_uniform_test(
            masters[0], h_eff, u0, epsilons, delta, T,
            boundary=cfg["evolution"]["boundary"],
            cfl=cfg["evolution"]["cfl"],
            n_times=cfg["evolution"]["snapshots"])
        report.local_uniform = errors
        report.liminf_statistic = liminf
        report.thetas = {eps: {"theta0": thetas[eps].theta0}
                         for eps in thetas}
        pair = weak_star_test(masters, h_eff, u0, epsilons, T,
                              boundary=cfg["evolution"]["boundary"],
                              cfl=cfg["evolution"]["cfl"],
                              n_times=cfg["evolution"]["snapshots"])
        report.weak_pairings = pair
        key = "spanning" if spanning_exists else "bounded"
        report.verdicts["local_uniform_decreasing"] = _decreasing(
            [errors[eps][key] for eps in epsilons])
        for k, per_eps in pair.items():
            report.verdicts[f"weak_phi{k}_decreasing"] = _decreasing(
                [per_eps[eps] for eps in epsilons])

    stage("evolve", do_evolve)

    def do_stationary():
        if not cfg["stationary"]["enabled"] or not spanning_exists:
            return
        p_list = [P_NAMES[name] for name in cfg["stationary"]["p_list"].split()]
        sups = stationary_test(masters[0], h_eff, p_list, epsilons,
                               cfg["evolution"]["delta"],
                               boundary=cfg["evolution"]["boundary"],
                               cfl=cfg["evolution"]["cfl"],
                               tol=cfg["stationary"]["tol"])
        report.stationary_sup = sups
        for p, per_eps in sups.items():
            report.verdicts[f"stationary_{p}_decreasing"] = _decreasing(
                [per_eps[eps] for eps in epsilons])

    stage("stationary", do_stationary)

    def do_summary():
        rows = []
        for eps in epsilons:
            err = report.local_uniform.get(eps, {})
            rows.append(("local_uniform_spanning", "", eps,
                         err.get("spanning", math.nan)))
            rows.append(("local_uniform_bounded", "", eps,
                         err.get("bounded", math.nan)))
            rows.append(("liminf_statistic", "", eps,
                         report.liminf_statistic.get(eps, math.nan)))
        for k, per_eps in sorted(report.weak_pairings.items()):
            for eps in epsilons:
                rows.append(("weak_pairing", f"phi{k}", eps, per_eps[eps]))
        for p, per_eps in report.stationary_sup.items():
            for eps in epsilons:
                rows.append(("stationary_sup", repr(p), eps, per_eps[eps]))
        for name, ok in sorted(report.verdicts.items()):
            rows.append(("verdict", name, math.nan, float(ok)))
        gridio.write_csv(os.path.join(out_dir, "summary.csv"),
                         ["statistic", "label", "epsilon", "value"], rows)

    stage("summary", do_summary)
    return report
