"""Experiment drivers behind the command-line interface.

Every driver takes an integer ``seed`` and derives one random stream per
``(n, trial)`` pair, so rows do not depend on how trials are scheduled over
worker threads.  Each returns an :class:`~volratio.report.ExperimentReport`.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence

import numpy as np

from .bodies import MEMBERSHIP_TOL, Body, LinearImage, LpBall, SymmetricGauge
from .constructions import (
    BOBKOV_INNER,
    bobkov_check,
    dr_parallelepiped,
    gluskin_polytope,
    isotropic_unconditional,
    schatten_sandwich_check,
    tau_u,
    unitary_invariant_ball,
)
from .errors import SingularT, Unsupported
from .linalg import RngStream, random_rotation, sample_gaussian_matrix
from .operators import ell_norm, exact_generators, id_l2_to, operator_norm
from .report import ExperimentReport, ReportRow
from .sampling import best_log_volume, isotropic_normalize, santalo_product
from .solver import vr_estimate, vr_grid_oracle

VR_NOTE = ("vr values are upper bounds from certified max-det inclusions "
           "(multi-start local solver, checked against a grid oracle only for n <= 3)")
RUDELSON_NOTE = "Rudelson position replaced by isotropic position (Rudelson->isotropic)"

# stream ids reserved for per-dimension setup work, far from trial indices
_SETUP = 1 << 40


def resolve_threads(threads: int | None) -> int:
    """``threads`` if given, else ``$VOLRATIO_THREADS``, else 1."""
    if threads is None:
        env = os.environ.get("VOLRATIO_THREADS", "").strip()
        threads = int(env) if env else 1
    return max(1, int(threads))


def run_trials(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """``[fn(i) for i in items]``, optionally on a thread pool (order preserved)."""
    if threads <= 1 or len(items) <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def trial_stream(seed: int, n: int, trial: int) -> RngStream:
    return RngStream(seed).substream(n).substream(trial)


def setup_stream(seed: int, n: int, k: int = 0) -> RngStream:
    return RngStream(seed).substream(n).substream(_SETUP + k)


def _quantiles(v: np.ndarray) -> dict:
    if v.size == 0:
        return {"median": math.nan, "q25": math.nan, "q75": math.nan}
    q25, med, q75 = np.quantile(v, [0.25, 0.5, 0.75])
    return {"median": float(med), "q25": float(q25), "q75": float(q75)}


def fit_power_law(ns, values) -> dict:
    """Least squares ``log v = log c + b log n`` plus the constant with ``b = 1/2`` fixed."""
    ns = np.asarray(ns, float)
    v = np.asarray(values, float)
    keep = (ns > 1) & np.isfinite(v) & (v > 0)
    ns, v = ns[keep], v[keep]
    out = {"exponent": math.nan, "constant": math.nan, "constant_sqrt": math.nan}
    if ns.size >= 1:
        out["constant_sqrt"] = float(np.exp(np.mean(np.log(v) - 0.5 * np.log(ns))))
    if ns.size >= 2:
        b, a = np.polyfit(np.log(ns), np.log(v), 1)
        out["exponent"] = float(b)
        out["constant"] = float(np.exp(a))
    return out


# ---------------------------------------------------------------------------
# lower bounds through Gluskin polytopes
# ---------------------------------------------------------------------------


def lvr_gluskin_experiment(k_of_n: Callable[[int], Body], delta: float, dims: Sequence[int],
                           trials: int, seed: int, threads: int = 1, restarts: int = 5,
                           label: str = "", name: str = "lvr_gluskin") -> ExperimentReport:
    """Median of vr(K, L^(ceil(delta n))) over random Gluskin polytopes, per n."""
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims), "trials": trials,
                                         "delta": delta, "body": label, "restarts": restarts})
    rep.notes.append(VR_NOTE)
    medians = []
    for n in dims:
        k = k_of_n(n)
        m = math.ceil(delta * n)
        vol_k = best_log_volume(k, setup_stream(seed, n))

        def one(t, n=n, k=k, m=m, vol_k=vol_k):
            r = trial_stream(seed, n, t)
            lpoly = gluskin_polytope(n, m, r.substream(0))
            if n == 1:
                return ReportRow(name, n, t, seed, 1.0, 0.0, "ok")
            e = vr_estimate(k, lpoly, r.substream(1), restarts=restarts, vol_k=vol_k)
            ok = e.result.max_gauge <= 1.0 + MEMBERSHIP_TOL
            return ReportRow(name, n, t, seed, e.value, e.std_error, "ok" if ok else "violation")

        rows = run_trials(one, range(trials), threads)
        rep.rows.extend(rows)
        rep.violations += sum(r.flag == "violation" for r in rows)
        q = _quantiles(np.array([r.value for r in rows]))
        q["m"] = m
        rep.aggregates[f"n={n}"] = q
        medians.append(q["median"])
    rep.aggregates["fit"] = fit_power_law(dims, medians)
    return rep


# ---------------------------------------------------------------------------
# Dvoretzky-Rogers parallelepipeds and Gaussian determinants
# ---------------------------------------------------------------------------


def dr_experiment(l_of_n: Callable[[int], Body], dims: Sequence[int], trials: int, seed: int,
                  threads: int = 1, n_iso_samples: int | None = None, det_constant: float = 0.1,
                  ratio_constant: float = 3.0, label: str = "") -> ExperimentReport:
    """Random parallelepipeds ``P = T^-1(B_inf)`` containing ``L``.

    Rows: ``dr_ratio`` = ``(|P|/|L|)^(1/n)``; ``dr_det`` =
    ``|det T|^(1/n) / (sqrt(n) L_polar)``; ``dr_position`` = ratio of the
    position ``T(L) / (2 sqrt(pi e))`` inside the volume-one cube.
    """
    name = "dr_parallelepiped"
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims), "trials": trials,
                                         "body": label, "det_constant": det_constant,
                                         "ratio_constant": ratio_constant})
    rep.notes.append("polar body put in empirical isotropic position by hit-and-run covariance")
    rep.notes.append("dr_position uses the isotropic cube and scale 1/(2 sqrt(pi e)); reported, not asserted")
    for n in dims:
        l = l_of_n(n)
        iso = isotropic_normalize(l.polar(), n_iso_samples, setup_stream(seed, n, 0), recheck=False)
        vol_l = best_log_volume(l, setup_stream(seed, n, 1))
        lc = iso.L_constant

        def one(t, n=n, l=l, iso=iso, vol_l=vol_l, lc=lc):
            r = trial_stream(seed, n, t)
            try:
                res = dr_parallelepiped(l, r, iso=iso, vol_l=vol_l)
            except SingularT:
                return [ReportRow("dr_ratio", n, t, seed, math.nan, 0.0, "singular")]
            flag = "ok" if res.included else "violation"
            det_n = math.exp(res.T.log_abs_det / n)
            log_l_iso = vol_l.log_volume - iso.map.log_abs_det
            pos = math.exp(-(n * math.log(BOBKOV_INNER) + res.T.log_abs_det + log_l_iso) / n)
            return [
                ReportRow("dr_ratio", n, t, seed, res.ratio, res.ratio_stderr, flag),
                ReportRow("dr_det", n, t, seed, det_n / (math.sqrt(n) * lc), 0.0,
                          "ok" if det_n >= det_constant * math.sqrt(n) * lc else "below"),
                ReportRow("dr_position", n, t, seed, pos, res.ratio_stderr, flag),
            ]

        rows = [row for group in run_trials(one, range(trials), threads) for row in group]
        rep.rows.extend(rows)
        rep.violations += sum(r.flag == "violation" for r in rows if r.experiment == "dr_ratio")
        ratios = np.array([r.value for r in rows if r.experiment == "dr_ratio" and r.flag != "singular"])
        dets = [r for r in rows if r.experiment == "dr_det"]
        agg = _quantiles(ratios)
        agg["L_polar"] = lc
        agg["bound"] = ratio_constant * math.sqrt(n) / lc
        agg["within_bound"] = bool(agg["median"] <= agg["bound"])
        agg["det_fraction"] = float(np.mean([r.flag == "ok" for r in dets])) if dets else math.nan
        agg["det_target"] = 1.0 - math.exp(-n)
        agg["singular"] = int(sum(r.flag == "singular" for r in rows))
        agg["position_median"] = _quantiles(
            np.array([r.value for r in rows if r.experiment == "dr_position"]))["median"]
        rep.aggregates[f"n={n}"] = agg
    return rep


def det_bound_experiment(dims: Sequence[int], trials: int, seed: int, constant: float = 0.1,
                         threads: int = 1) -> ExperimentReport:
    """Fraction of Gaussian matrices with ``|det G|^(1/n) >= constant sqrt(n)``."""
    name = "det_bound"
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims), "trials": trials,
                                         "constant": constant})
    for n in dims:
        def one(t, n=n):
            g = sample_gaussian_matrix(n, trial_stream(seed, n, t))
            v = math.exp(np.linalg.slogdet(g)[1] / n) / math.sqrt(n)
            return ReportRow(name, n, t, seed, v, 0.0, "ok" if v >= constant else "below")

        rows = run_trials(one, range(trials), threads)
        rep.rows.extend(rows)
        agg = _quantiles(np.array([r.value for r in rows]))
        agg["fraction"] = float(np.mean([r.flag == "ok" for r in rows]))
        agg["target"] = 1.0 - math.exp(-n)
        rep.aggregates[f"n={n}"] = agg
    return rep


# ---------------------------------------------------------------------------
# inclusion theorems checked pointwise
# ---------------------------------------------------------------------------


def bobkov_experiment(body: Body, n_points: int, seed: int, allowance: float = 1.1,
                      label: str = "") -> ExperimentReport:
    """Unconditional isotropic sandwich ``c_in B_inf subset K subset c_out n B_1``."""
    name = "bobkov_check"
    rep = ExperimentReport(name, config={"seed": seed, "body": label or body.variant,
                                         "samples": n_points, "allowance": allowance})
    n = body.dim
    try:
        k_iso = isotropic_unconditional(body)
        rep.notes.append("exact isotropic position (volume-one dilate of an l_p ball)")
    except Unsupported:
        k_iso = isotropic_normalize(body, None, setup_stream(seed, n)).image
        rep.notes.append("empirical isotropic position; inclusion constants loosened by the allowance")
    chk = bobkov_check(k_iso, n_points, trial_stream(seed, n, 0), allowance=allowance)
    rep.notes.extend(chk.notes)
    for i, side in enumerate(("inner", "outer")):
        bad = chk.violations[side]
        rep.rows.append(ReportRow(f"bobkov_{side}", n, i, seed, chk.max_violation[side], 0.0,
                                  "ok" if bad == 0 else "violation"))
    rep.violations = chk.total_violations
    rep.aggregates = {"points": chk.n_points, "violations": dict(chk.violations),
                      "max_violation": dict(chk.max_violation)}
    return rep


def sandwich_experiment(tau: SymmetricGauge, dims: Sequence[int], n_points: int, seed: int,
                        label: str = "") -> ExperimentReport:
    """``S_inf / tau(u) subset B_N subset (d / tau(u)) S_1`` on ``d x d`` matrices (``n`` = d)."""
    name = "sandwich_check"
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims), "tau": label or tau.to_dict(),
                                         "samples": n_points})
    rep.notes.append("column n holds the matrix size d; the ambient dimension is d^2")
    for d in dims:
        chk = schatten_sandwich_check(tau, d, n_points, trial_stream(seed, d, 0))
        for i, side in enumerate(("inner", "outer")):
            bad = chk.violations[side]
            rep.rows.append(ReportRow(f"sandwich_{side}", d, i, seed, chk.max_violation[side], 0.0,
                                      "ok" if bad == 0 else "violation"))
        rep.violations += chk.total_violations
        rep.aggregates[f"d={d}"] = {"tau_u": tau_u(tau, d), "violations": dict(chk.violations),
                                    "max_violation": dict(chk.max_violation)}
    return rep


# ---------------------------------------------------------------------------
# unitary-invariant balls
# ---------------------------------------------------------------------------


def schatten_lvr_experiment(tau: SymmetricGauge, dims: Sequence[int], trials: int, seed: int,
                            threads: int = 1, delta: float = 2.0, restarts: int = 3,
                            n_iso_samples: int = 2000, volume_samples: int = 4000,
                            label: str = "") -> ExperimentReport:
    """Both sides of ``lvr(B_N) ~ d`` for the unit ball of ``tau(singular values)``.

    ``schatten_lower`` rows: vr(B_N, Gluskin polytope in R^(d^2)).
    ``schatten_upper`` rows: ``(|B_N| / |L~|)^(1/d^2)`` for the Gaussian
    position ``L~ = A L / (||A : X_L -> S_inf|| tau(u))`` of an isotropic
    Gluskin polytope ``L``.  Column ``n`` holds ``d``.
    """
    name = "schatten_lvr"
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims), "trials": trials,
                                         "delta": delta, "tau": label or tau.to_dict(),
                                         "restarts": restarts, "iso_samples": n_iso_samples})
    rep.notes += [VR_NOTE, RUDELSON_NOTE, "column n holds the matrix size d; the ambient dimension is d^2"]
    for d in dims:
        n = d * d
        ball = unitary_invariant_ball(tau, d)
        s_inf = unitary_invariant_ball(SymmetricGauge.lp(math.inf), d)
        vol_b = best_log_volume(ball, setup_stream(seed, d), volume_samples)
        u = tau_u(tau, d)
        m = math.ceil(delta * n)

        def lower(t, d=d, n=n, ball=ball, vol_b=vol_b, m=m):
            r = trial_stream(seed, d, t)
            lpoly = gluskin_polytope(n, m, r.substream(0))
            e = vr_estimate(ball, lpoly, r.substream(1), restarts=restarts, vol_k=vol_b)
            ok = e.result.max_gauge <= 1.0 + MEMBERSHIP_TOL
            return ReportRow("schatten_lower", d, t, seed, e.value, e.std_error, "ok" if ok else "violation")

        def upper(t, d=d, n=n, ball=ball, s_inf=s_inf, vol_b=vol_b, u=u, m=m):
            r = trial_stream(seed, d, trials + t)
            lpoly = gluskin_polytope(n, m, r.substream(0))
            vol_l = best_log_volume(lpoly, r.substream(1))
            iso = isotropic_normalize(lpoly, n_iso_samples, r.substream(2), volume=vol_l, recheck=False)
            a = sample_gaussian_matrix(n, r.substream(3))
            norm, _ = operator_norm(a, iso.image, s_inf)
            pos = LinearImage(iso.image, a / (norm * u))
            worst = float(ball._gauge(exact_generators(pos)).max())
            log_pos = (vol_l.log_volume + iso.map.log_abs_det + np.linalg.slogdet(a)[1]
                       - n * math.log(norm * u))
            ratio = math.exp((vol_b.log_volume - log_pos) / n)
            se = ratio * vol_b.std_error / n
            return ReportRow("schatten_upper", d, t, seed, ratio, se,
                             "ok" if worst <= 1.0 + MEMBERSHIP_TOL else "violation")

        low = run_trials(lower, range(trials), threads)
        up = run_trials(upper, range(trials), threads)
        rep.rows.extend(low + up)
        rep.violations += sum(r.flag == "violation" for r in low + up)
        lo_q = _quantiles(np.array([r.value for r in low]))
        up_q = _quantiles(np.array([r.value for r in up]))
        rep.aggregates[f"d={d}"] = {
            "lower": lo_q, "upper": up_q, "tau_u": u,
            "lower_median_over_d": lo_q["median"] / d,
            "upper_median_over_d": up_q["median"] / d,
            "log_volume_ball": vol_b.log_volume, "log_volume_ball_stderr": vol_b.std_error,
        }
    return rep


# ---------------------------------------------------------------------------
# Gaussian operators
# ---------------------------------------------------------------------------


def chevet_tail_experiment(l_of_n: Callable[[int], Body], k_of_n: Callable[[int], Body],
                           dims: Sequence[int], trials: int, u_grid: Sequence[float], seed: int,
                           ell_samples: int = 20000, threads: int = 1, label: str = "") -> ExperimentReport:
    """Tail of ``||A : X_L -> X_K||`` for Gaussian ``A`` against the Chevet-type bound.

    ``bound(u) = l(K) a + l(L°) b + u a b`` with ``a = ||id : l_2 -> X_{L°}||``
    and ``b = ||id : l_2 -> X_K||``.  The fitted constant is the largest
    ratio of the empirical ``(1 - exp(-u^2))``-quantile to the bound.
    """
    name = "chevet_tail"
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims), "trials": trials,
                                         "u_grid": list(u_grid), "bodies": label,
                                         "ell_samples": ell_samples})
    worst = 0.0
    for n in dims:
        l, k = l_of_n(n), k_of_n(n)
        gens = exact_generators(l)
        if gens is None:
            raise Unsupported(f"{l.variant} has no exact generators; the operator norm would be uncertified")
        lp = l.polar()
        ell_k, se_k = ell_norm(k, ell_samples, setup_stream(seed, n, 0))
        ell_lp, se_lp = ell_norm(lp, ell_samples, setup_stream(seed, n, 1))
        a, b = id_l2_to(lp), id_l2_to(k)

        def one(t, n=n, k=k, gens=gens):
            g = sample_gaussian_matrix(n, trial_stream(seed, n, t))
            return ReportRow(name, n, t, seed, float(k._gauge(gens @ g.T).max()), 0.0, "ok")

        rows = run_trials(one, range(trials), threads)
        rep.rows.extend(rows)
        vals = np.array([r.value for r in rows])
        per_u = {}
        for u in u_grid:
            level = 1.0 - math.exp(-u * u)
            q = float(np.quantile(vals, level))
            bound = ell_k * a + ell_lp * b + u * a * b
            per_u[f"u={u:g}"] = {"level": level, "quantile": q, "bound": bound, "ratio": q / bound}
            worst = max(worst, q / bound)
        rep.aggregates[f"n={n}"] = {"ell_K": ell_k, "ell_K_stderr": se_k, "ell_Lpolar": ell_lp,
                                    "ell_Lpolar_stderr": se_lp, "id_to_Lpolar": a, "id_to_K": b,
                                    "mean": float(vals.mean()), "tail": per_u}
    rep.aggregates["fitted_C"] = worst
    return rep


# ---------------------------------------------------------------------------
# vr(B_inf, L) against the isotropic constant of the polar
# ---------------------------------------------------------------------------


def producto_piola_experiment(families: Sequence[tuple[str, Callable[[int], Body]]], dims: Sequence[int],
                              seed: int, threads: int = 1, restarts: int = 5,
                              n_iso_samples: int | None = None) -> ExperimentReport:
    """``vr(B_inf^n, L) * L_{L°} / sqrt(n)`` over a zoo; column ``trial`` indexes the zoo."""
    name = "producto_piola"
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims),
                                         "bodies": [lab for lab, _ in families], "restarts": restarts})
    rep.notes += [VR_NOTE, "isotropic constant of the polar from hit-and-run covariance"]
    jobs = [(n, i) for n in dims for i in range(len(families))]

    def one(job):
        n, i = job
        l = families[i][1](n)
        cube = LpBall(math.inf, n)
        r = trial_stream(seed, n, i)
        e = vr_estimate(cube, l, r.substream(0), restarts=restarts)
        iso = isotropic_normalize(l.polar(), n_iso_samples, r.substream(1), recheck=False)
        v = e.value * iso.L_constant / math.sqrt(n)
        se = v * math.hypot(e.std_error / e.value, iso.L_stderr / iso.L_constant)
        return ReportRow(name, n, i, seed, v, se, "ok" if e.exact_source else "approx")

    rows = run_trials(one, jobs, threads)
    rep.rows.extend(rows)
    for n in dims:
        vals = {families[r.trial][0]: r.value for r in rows if r.n == n}
        rep.aggregates[f"n={n}"] = vals
    rep.aggregates["max"] = float(max(r.value for r in rows)) if rows else math.nan
    return rep


# ---------------------------------------------------------------------------
# Santalo product
# ---------------------------------------------------------------------------


def santalo_experiment(families: Sequence[tuple[str, Callable[[int], Body]]], dims: Sequence[int],
                       seed: int, n_samples: int = 4000, threads: int = 1) -> ExperimentReport:
    """``n (|K| |K°|)^(1/n)`` over a zoo; column ``trial`` indexes the zoo.

    ``santalo_affine`` rows repeat the computation on a random linear image.
    """
    name = "santalo"
    rep = ExperimentReport(name, config={"seed": seed, "dims": list(dims),
                                         "bodies": [lab for lab, _ in families], "samples": n_samples})
    jobs = [(n, i) for n in dims for i in range(len(families))]

    def one(job):
        n, i = job
        body = families[i][1](n)
        r = trial_stream(seed, n, i)
        v, se = santalo_product(body, r.substream(0), n_samples)
        t = random_rotation(n, r.substream(1)) @ np.diag(np.exp(r.substream(2).normal(n) * 0.5))
        va, sea = santalo_product(LinearImage(body, t), r.substream(3), n_samples)
        return [ReportRow(name, n, i, seed, v, se, "ok"), ReportRow("santalo_affine", n, i, seed, va, sea, "ok")]

    rows = [row for group in run_trials(one, jobs, threads) for row in group]
    rep.rows.extend(rows)
    for n in dims:
        vals = {families[r.trial][0]: r.value for r in rows if r.n == n and r.experiment == name}
        best = max(vals, key=vals.get)
        rep.aggregates[f"n={n}"] = {"values": vals, "argmax": best}
    return rep


# ---------------------------------------------------------------------------
# single pair
# ---------------------------------------------------------------------------


def vr_experiment(k: Body, l: Body, seed: int, restarts: int = 5, samples: int = 4000,
                  label_k: str = "", label_l: str = "") -> ExperimentReport:
    """vr(K, L) for one pair, with the grid oracle alongside in dimension <= 3."""
    name = "vr"
    rep = ExperimentReport(name, config={"seed": seed, "body_k": label_k or k.to_dict(),
                                         "body_l": label_l or l.to_dict(), "restarts": restarts,
                                         "samples": samples})
    rep.notes.append(VR_NOTE)
    n = k.dim
    r = trial_stream(seed, n, 0)
    e = vr_estimate(k, l, r, restarts=restarts, volume_samples=samples)
    rep.notes.extend(e.notes)
    ok = e.result.max_gauge <= 1.0 + MEMBERSHIP_TOL
    flag = "violation" if not ok else ("ok" if e.exact_source else "approx")
    rep.rows.append(ReportRow(name, n, 0, seed, e.value, e.std_error, flag))
    rep.violations = int(not ok)
    rep.aggregates = {
        "vr": e.value, "stderr": e.std_error, "max_gauge": e.result.max_gauge,
        "restart_values": e.result.restart_values, "iterations": e.result.iterations,
        "converged": e.result.converged, "T": e.result.T_best.matrix,
    }
    if n <= 3 and e.exact_source:
        rep.aggregates["grid_oracle"] = vr_grid_oracle(k, l, r.substream(99), volume_samples=samples)
    return rep
