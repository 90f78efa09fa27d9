"""Experiment execution behind the command-line tool.

Work is split into independent tasks (one per ``x0`` or per seed), evaluated
on a thread pool, and merged in task order; rows are sorted again on output,
so results never depend on scheduling.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable

from .config import ExperimentConfig
from .identity import sinc_identity_check
from .jacobi import RecurrenceOverflow
from .kernels import (
    boundary_weight,
    diag_kernel_trace,
    mixed_symmetrized_kernel,
    point_mass_verdict,
    scaled_kernel,
    second_kind_kernel,
    universality_report,
)
from .output import Row, make_row
from .perturbation import apply, l2_condition_partial, variation_of_parameters
from .stieltjes import (
    boundary_F,
    eigenvalue_and_mass,
    rank_one_F,
    second_kind_weight_via_strip,
    weights,
)

__all__ = ["RunResult", "run"]

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC = 0, 1, 2

# Numerical failures that become a per-row status instead of aborting the run.
NUMERIC_ERRORS = (ArithmeticError, ValueError, IndexError)


@dataclass
class RunResult:
    rows: list[Row]
    summary: dict[str, Any]
    exit_code: int = EXIT_OK
    failures: list[str] = field(default_factory=list)


@dataclass
class _Part:
    rows: list[Row] = field(default_factory=list)
    summary: dict[str, Any] = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)


def _status(exc: BaseException) -> str:
    return f"error:{type(exc).__name__}"


class _Ctx:
    def __init__(self, cfg: ExperimentConfig):
        self.cfg = cfg
        self.base = cfg.parameters()

    def row(self, *, seed=None, perturbation="none", x0=0.0, n=0, a=0j, b=0j, mode,
            value=None, target=None, abs_err=None, status="ok") -> Row:
        return make_row(self.cfg.experiment_id, self.cfg.measure, perturbation, seed,
                        x0, n, a, b, mode, value, target, abs_err, status)


def _describe(spec) -> str:
    return "none" if spec is None else spec.describe()


def _error_rows(ctx: _Ctx, part: _Part, exc: BaseException, *, x0, mode, seed=None,
                perturbation="none", n_list=None, grid=None):
    status = _status(exc)
    part.failures.append(f"x0={x0} seed={seed}: {status}: {exc}")
    for n in n_list or (0,):
        for a, b in grid or ((0j, 0j),):
            part.rows.append(ctx.row(seed=seed, perturbation=perturbation, x0=x0, n=n,
                                     a=a, b=b, mode=mode, status=status))
    part.summary["error"] = f"{status}: {exc}"


def _kernel_task(ctx: _Ctx, x0: float, params, pert_name: str, seed=None,
                 weight: float | None = None) -> _Part:
    """Scaled-kernel rows over the n ladder and grid at one point."""
    cfg = ctx.cfg
    part = _Part(summary={"x0": x0})
    if seed is not None:
        part.summary["seed"] = seed
    try:
        if weight is None:
            w, bv = boundary_weight(params, x0)
            part.summary.update(F=bv.F, boundary_err=bv.err_estimate,
                                strong_lebesgue=bv.converged)
        else:
            w = weight
        part.summary["weight"] = w
        if cfg.mode == "by_n":
            rep = universality_report(params, x0, cfg.n, cfg.grid, weight=w)
            if w <= 0:
                strong = part.summary.get("strong_lebesgue", True)
                status = "no_ac_weight" if strong else "not_strong_lebesgue"
                for n, kd in zip(cfg.n, rep.diag_trace):
                    for a, b in cfg.grid:
                        part.rows.append(ctx.row(seed=seed, perturbation=pert_name, x0=x0,
                                                 n=n, a=a, b=b, mode="by_n",
                                                 status=status))
            for s in rep.samples:
                part.rows.append(ctx.row(seed=seed, perturbation=pert_name, x0=x0, n=s.n,
                                         a=s.a, b=s.b, mode="by_n", value=s.value,
                                         target=s.target, abs_err=s.abs_err))
            part.summary.update(
                n=list(rep.n_list), rho_hat=list(rep.rho_hat), sup_err=list(rep.sup_err),
                diag_trace=list(rep.diag_trace), point_mass_verdict=rep.point_mass_verdict,
                saturation_value=rep.saturation_value,
            )
            return part
        sup, rho = [], []
        for n in cfg.n:
            worst, rho_n = 0.0, math.nan
            for a, b in cfg.grid:
                s = scaled_kernel(params, x0, a, b, n, "by_diag", weight=w)
                rho_n = s.rho_hat
                worst = max(worst, s.abs_err)
                part.rows.append(ctx.row(seed=seed, perturbation=pert_name, x0=x0, n=n,
                                         a=a, b=b, mode="by_diag", value=s.value,
                                         target=s.target, abs_err=s.abs_err))
            sup.append(worst)
            rho.append(rho_n)
        part.summary.update(n=list(cfg.n), rho_hat=rho, sup_err=sup)
        horizon = params.horizon
        n_max = max(cfg.n)
        if horizon is None or 2 * n_max <= horizon:
            trace = diag_kernel_trace(params, x0, 2 * n_max)
            part.summary["point_mass_verdict"] = point_mass_verdict(
                float(trace[n_max - 1]), float(trace[2 * n_max - 1]))
    except NUMERIC_ERRORS as exc:
        _error_rows(ctx, part, exc, x0=x0, mode=cfg.mode, seed=seed,
                    perturbation=pert_name, n_list=cfg.n, grid=cfg.grid)
    return part


def _universality(ctx: _Ctx) -> list[Callable[[], _Part]]:
    spec = ctx.cfg.perturbation()
    params = ctx.base if spec is None else apply(ctx.base, spec)
    name = _describe(spec)

    def task(x0):
        part = _kernel_task(ctx, x0, params, name)
        if spec is not None and "rho_hat" in part.summary:
            # Density against the unperturbed measure at the same n.
            try:
                ref = universality_report(ctx.base, x0, ctx.cfg.n, [(0j, 0j)])
                part.summary["rho_hat_unperturbed"] = list(ref.rho_hat)
                part.summary["rho_ratio"] = [
                    r / r0 if r0 else math.nan
                    for r, r0 in zip(part.summary["rho_hat"], ref.rho_hat)
                ]
            except NUMERIC_ERRORS as exc:
                part.summary["rho_hat_unperturbed"] = _status(exc)
        return part

    return [lambda x0=x0: task(x0) for x0 in ctx.cfg.x0]


def _random(ctx: _Ctx) -> list[Callable[[], _Part]]:
    cfg = ctx.cfg

    def task(x0, seed):
        spec = cfg.perturbation(seed)
        params = apply(ctx.base, spec)
        try:
            # Beyond the horizon the draws are undefined; the weight is that
            # of the measure whose parameters stop being perturbed there.
            w = weights(params.truncated(), x0).w
        except NUMERIC_ERRORS as exc:
            part = _Part(summary={"x0": x0, "seed": seed})
            _error_rows(ctx, part, exc, x0=x0, mode=cfg.mode, seed=seed,
                        perturbation=spec.describe(), n_list=cfg.n, grid=cfg.grid)
            return part
        return _kernel_task(ctx, x0, params, spec.describe(), seed=seed, weight=w)

    def l2_task(x0):
        spec = cfg.perturbation(cfg.seeds[0])
        part = _Part()
        try:
            l2 = l2_condition_partial(ctx.base, x0, spec.variance, cfg.l2_N)
            part.summary = {"x0": x0, "l2": {"N": cfg.l2_N, "S_N": l2.S_N, "S_2N": l2.S_2N,
                                              "increment": l2.increment,
                                              "bounded": l2.bounded}}
        except NUMERIC_ERRORS as exc:
            part.summary = {"x0": x0, "l2": _status(exc)}
        return part

    tasks = [lambda x0=x0, s=s: task(x0, s) for x0 in cfg.x0 for s in cfg.seeds]
    tasks += [lambda x0=x0: l2_task(x0) for x0 in cfg.x0]
    return tasks


def _second_kind(ctx: _Ctx) -> list[Callable[[], _Part]]:
    cfg = ctx.cfg
    spec = cfg.perturbation()
    params = ctx.base if spec is None else apply(ctx.base, spec)
    name = _describe(spec)

    def task(x0):
        part = _Part(summary={"x0": x0})
        try:
            wb = weights(params, x0)
            part.summary.update(weight=wb.w, w_tilde=wb.w_tilde,
                                w_tilde_strip=second_kind_weight_via_strip(params, x0))
            sup, rho, rho2, mixed_sup = [], [], [], []
            for n in cfg.n:
                worst = mixed_worst = 0.0
                for a, b in cfg.grid:
                    s = second_kind_kernel(params, x0, a, b, n)
                    worst = max(worst, s.abs_err)
                    if a == b == 0:
                        rho2.append(s.value.real * wb.w_tilde)
                    part.rows.append(ctx.row(perturbation=name, x0=x0, n=n, a=a, b=b,
                                             mode="second_kind", value=s.value,
                                             target=s.target, abs_err=s.abs_err))
                    mk = mixed_symmetrized_kernel(params, x0, a, b, n)
                    mixed_worst = max(mixed_worst, abs(mk.value - mk.predicted_limit))
                    part.rows.append(ctx.row(perturbation=name, x0=x0, n=n, a=a, b=b,
                                             mode="mixed", value=mk.value,
                                             target=mk.predicted_limit,
                                             abs_err=abs(mk.value - mk.predicted_limit)))
                sup.append(worst)
                mixed_sup.append(mixed_worst)
                rho.append(s.rho_hat)
            part.summary.update(n=list(cfg.n), rho_hat=rho, sup_err=sup,
                                mixed_sup_err=mixed_sup)
            if rho2:
                part.summary["rho_hat_second_kind"] = rho2
        except NUMERIC_ERRORS as exc:
            _error_rows(ctx, part, exc, x0=x0, mode="second_kind", perturbation=name,
                        n_list=cfg.n, grid=cfg.grid)
        return part

    return [lambda x0=x0: task(x0) for x0 in cfg.x0]


def _stieltjes(ctx: _Ctx) -> list[Callable[[], _Part]]:
    cfg = ctx.cfg
    spec = cfg.perturbation()
    name = _describe(spec)

    def task(x0):
        part = _Part(summary={"x0": x0})
        try:
            bv = boundary_F(ctx.base, x0)
            status = "ok" if bv.converged else "not_strong_lebesgue"
            part.rows.append(ctx.row(perturbation=name, x0=x0, mode="boundary_F",
                                     value=bv.F, abs_err=bv.err_estimate, status=status))
            part.summary.update(F=bv.F, err_estimate=bv.err_estimate, converged=bv.converged)
            if bv.converged:
                wb = weights(ctx.base, x0, beta1=cfg.beta1)
                part.summary.update(w=wb.w, w_tilde=wb.w_tilde, w_beta=wb.w_beta)
                if cfg.beta1 is not None:
                    Fb = rank_one_F(bv.F, cfg.beta1)
                    part.rows.append(ctx.row(perturbation=name, x0=x0, mode="boundary_F_beta",
                                             value=Fb))
                    part.summary["F_beta"] = Fb
        except NUMERIC_ERRORS as exc:
            _error_rows(ctx, part, exc, x0=x0, mode="boundary_F", perturbation=name)
        return part

    return [lambda x0=x0: task(x0) for x0 in cfg.x0]


def _eigenvalue(ctx: _Ctx) -> list[Callable[[], _Part]]:
    cfg = ctx.cfg
    spec = cfg.perturbation()
    name = _describe(spec)

    def task():
        part = _Part(summary={"bracket": list(cfg.bracket)})
        try:
            ev = eigenvalue_and_mass(ctx.base, cfg.beta1, cfg.bracket)
        except NUMERIC_ERRORS as exc:
            _error_rows(ctx, part, exc, x0=math.nan, mode="eigenvalue", perturbation=name)
            return part
        if ev is None:
            part.rows.append(ctx.row(perturbation=name, x0=math.nan, mode="eigenvalue",
                                     status="no_eigenvalue"))
            part.summary["found"] = False
            return part
        part.summary.update(found=True, E=ev.E, mass=ev.mass, residual=ev.residual)
        part.rows.append(ctx.row(perturbation=name, x0=ev.E, mode="eigenvalue", value=ev.E,
                                 abs_err=ev.residual))
        part.rows.append(ctx.row(perturbation=name, x0=ev.E, mode="mass", value=ev.mass))
        try:
            # sum_j p_j(E)^2 = 1 / mass at an eigenvalue of the perturbed operator.
            params = apply(ctx.base, spec)
            n_max = max(cfg.n)
            trace = diag_kernel_trace(params, ev.E, 2 * n_max)
            for n in cfg.n:
                k = float(trace[n - 1])
                part.rows.append(ctx.row(perturbation=name, x0=ev.E, n=n, mode="diag_kernel",
                                         value=k, target=1 / ev.mass,
                                         abs_err=abs(k - 1 / ev.mass)))
            k_n, k_2n = float(trace[n_max - 1]), float(trace[2 * n_max - 1])
            part.summary.update(point_mass_verdict=point_mass_verdict(k_n, k_2n),
                                K_n=k_n, K_2n=k_2n)
        except (RecurrenceOverflow, ArithmeticError) as exc:
            part.failures.append(f"diag_kernel: {_status(exc)}: {exc}")
            part.summary["point_mass_verdict"] = _status(exc)
        return part

    return [task]


def _identity(ctx: _Ctx) -> list[Callable[[], _Part]]:
    cfg = ctx.cfg

    def task():
        part = _Part()
        chk = sinc_identity_check(cfg.rho, cfg.a, cfg.b, cfg.quad_tol)
        ok = chk.converged and chk.max_dev <= cfg.quad_tol
        status = "ok" if ok else ("not_converged" if not chk.converged else "fail")
        part.rows.append(ctx.row(a=cfg.a, b=cfg.b, mode="identity", value=chk.lhs,
                                 target=-chk.rhs_neg, abs_err=chk.max_dev, status=status))
        part.summary.update(rho=cfg.rho, a=cfg.a, b=cfg.b, lhs=chk.lhs, rhs_neg=chk.rhs_neg,
                            max_dev=chk.max_dev, radius=chk.radius, quad_err=chk.quad_err,
                            converged=chk.converged, quad_tol=cfg.quad_tol)
        if not ok:
            part.failures.append(
                f"identity check: max_dev {chk.max_dev:.3g} vs quad_tol {cfg.quad_tol:.3g}"
                + ("" if chk.converged else f"; quadrature reached {chk.quad_err:.3g}")
            )
        return part

    return [task]


def _varpar(ctx: _Ctx) -> list[Callable[[], _Part]]:
    cfg = ctx.cfg
    spec = cfg.perturbation()
    name = _describe(spec)

    def task(x0):
        part = _Part(summary={"x0": x0})
        N = max(cfg.n)
        try:
            vp = variation_of_parameters(ctx.base, spec, x0, N, cfg.tol)
        except NUMERIC_ERRORS + (RuntimeError,) as exc:
            _error_rows(ctx, part, exc, x0=x0, mode="varpar", perturbation=name,
                        n_list=cfg.n)
            return part
        final_u = complex(*vp.u[-1])
        final_v = complex(*vp.v[-1])
        for n in cfg.n:
            u = complex(*vp.u[n - 1])
            v = complex(*vp.v[n - 1])
            part.rows.append(ctx.row(perturbation=name, x0=x0, n=n, mode="varpar_u",
                                     value=u, target=final_u, abs_err=abs(u - final_u)))
            part.rows.append(ctx.row(perturbation=name, x0=x0, n=n, mode="varpar_v",
                                     value=v, target=final_v, abs_err=abs(v - final_v)))
        part.summary.update(N=N, converged_u=vp.converged_u, converged_v=vp.converged_v,
                            last_increment_u=vp.last_increment_u,
                            last_increment_v=vp.last_increment_v,
                            max_residual=vp.max_residual, u_final=final_u, v_final=final_v)
        return part

    return [lambda x0=x0: task(x0) for x0 in cfg.x0]


_DISPATCH = {
    "universality": _universality,
    "perturb": _universality,
    "second-kind": _second_kind,
    "random-perturb": _random,
    "stieltjes": _stieltjes,
    "eigenvalue": _eigenvalue,
    "identity-check": _identity,
    "varpar": _varpar,
}


def run(cfg: ExperimentConfig) -> RunResult:
    """Evaluate a validated configuration.

    The exit code is 2 when a mandatory check fails (identity check beyond
    tolerance) or any row carries a numerical error; otherwise 0.
    """
    ctx = _Ctx(cfg)
    tasks = _DISPATCH[cfg.command](ctx)
    if cfg.threads > 1 and len(tasks) > 1:
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            parts = list(pool.map(lambda t: t(), tasks))
    else:
        parts = [t() for t in tasks]

    rows = [r for p in parts for r in p.rows]
    failures = [f for p in parts for f in p.failures]
    spec = cfg.perturbation(cfg.seeds[0]) if cfg.command == "random-perturb" else cfg.perturbation()
    summary: dict[str, Any] = {
        "experiment_id": cfg.experiment_id,
        "command": cfg.command,
        "measure": cfg.measure,
        "perturbation": _describe(spec),
        "n": list(cfg.n),
        "x0": list(cfg.x0),
        "grid_size": len(cfg.grid),
        "mode": cfg.mode,
        "results": [p.summary for p in parts if p.summary],
        "failures": failures,
    }
    if cfg.command == "random-perturb":
        summary["seeds"] = list(cfg.seeds)
    code = EXIT_NUMERIC if failures else EXIT_OK
    return RunResult(rows, summary, code, failures)
