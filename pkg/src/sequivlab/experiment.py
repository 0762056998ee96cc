"""Experiment pipeline: wires the modules together and assembles the report."""

from __future__ import annotations

import json
import logging
import math
import platform
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .classical import conservation_drift, integrate, normal_form, s_equivalence_distance
from .compare import compare_amplitudes
from .config import ExperimentConfig, KernelConfig
from .errors import SequivError
from .io import write_csv, write_json, write_matrix_csv, write_trajectory_csv
from .lagrangian import (BaseLagrangian, HamiltonianForm, build_sprime_lagrangian,
                         equivalence_test, legendre_energy)
from .lattice import L_BASE, L_PRIME, KernelSpec, convergence_study, implied_ground_energy
from .models import EUCLIDEAN, REAL_TIME, GridSpec, shift_to_positive
from .momentum import (ASYMPTOTIC, SERIES_COEFFICIENTS, asymptotic_hprime, asymptotic_velocity,
                       conjugate_momentum, exact_hprime, hprime_series, invert_momentum,
                       log_approx_coefficients, log_approx_velocity, pde_residual,
                       power_law_pde_residual, series_velocity)
from .quantum import (build_hamiltonian, build_hprime_ordered, build_hprime_spectral,
                      commutator_norm, spectral_propagator)

log = logging.getLogger(__name__)

REPORT_SCHEMA = "sequivlab.report/1"
CONTROL_ORDER_WINDOW = (0.8, 1.2)


def _clean(obj):
    """Convert numpy scalars, tuples and non-finite floats into plain JSON values."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else None
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


@dataclass
class ComparisonReport:
    name: str
    config: dict
    sub_experiments: list
    sections: dict = field(default_factory=dict)
    errors: dict = field(default_factory=dict)
    partial: bool = False
    environment: dict = field(default_factory=dict)
    schema: str = REPORT_SCHEMA

    def to_dict(self):
        return _clean({"schema": self.schema, "name": self.name, "config": self.config,
                       "sub_experiments": self.sub_experiments, "sections": self.sections,
                       "errors": self.errors, "partial": self.partial,
                       "environment": self.environment})

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    @classmethod
    def from_dict(cls, d):
        return cls(name=d["name"], config=d["config"], sub_experiments=d["sub_experiments"],
                   sections=d["sections"], errors=d["errors"], partial=d["partial"],
                   environment=d["environment"], schema=d["schema"])

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))


def environment_info():
    return {"sequivlab": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__}


class _Context:
    """Objects shared between sub-experiments of one run."""

    def __init__(self, config: ExperimentConfig, out_dir: Path | None):
        self.config = config
        self.out_dir = out_dir
        self.potential = self._prepared_potential()
        self.base = BaseLagrangian(self.potential)
        self.prime = build_sprime_lagrangian(self.base, config.sigma, 0.0)
        self._operators = {}

    def _prepared_potential(self):
        pc = self.config.potential
        V = pc.model
        if pc.margin is None:
            return V
        if pc.domain is not None:
            domain = GridSpec(pc.domain[0], pc.domain[1], 1001)
        elif self.config.grid is not None:
            g = self.config.grid
            domain = GridSpec(g.x_min, g.x_max, g.n_points)
        else:
            domain = GridSpec(-10.0, 10.0, 1001)
        return shift_to_positive(V, domain, pc.margin)

    def operator(self, name):
        if name not in self._operators:
            grid = self.config.grid
            if name == "H":
                op = build_hamiltonian(self.potential, grid)
            elif name == "Hprime-spectral":
                op = build_hprime_spectral(self.operator("H"))
            else:
                op = build_hprime_ordered(self.potential, grid)
            self._operators[name] = op
        return self._operators[name]

    def write(self, kind, name, *args, **kwargs):
        if self.out_dir is None:
            return None
        path = self.out_dir / name
        {"csv": write_csv, "trajectory": write_trajectory_csv,
         "matrix": write_matrix_csv}[kind](path, *args, **kwargs)
        return name


# classical-check

def _construction_check(ctx, rng, n_points):
    """Quadrature route of the derived Lagrangian against its closed form."""
    quad_form = build_sprime_lagrangian(ctx.base, ctx.config.sigma, 0.0, closed_form=False)
    xs = rng.uniform(-5, 5, n_points)
    vs = rng.uniform(-5, 5, n_points)
    out = {"n_points": n_points}
    if ctx.config.sigma.kind == "half-square":
        V = ctx.potential(xs)
        closed = vs**4 / 24 + 0.5 * vs**2 * V - 0.5 * V**2
        Lq = quad_form.evaluate(xs, vs)
        Hq = legendre_energy(quad_form, xs, vs)
        H = 0.5 * vs**2 + V
        out["max_lagrangian_error"] = float(np.max(np.abs(Lq - closed)))
        out["max_energy_error"] = float(np.max(np.abs(Hq - 0.5 * H**2)))
    out["equivalence"] = equivalence_test(ctx.base, ctx.prime, ((-5, 5), (-5, 5)))
    return out


def run_classical(ctx, rng):
    cc = ctx.config.classical
    t_span = (0.0, cc.t_final)
    H = HamiltonianForm(ctx.base)
    Hp = HamiltonianForm(ctx.prime)
    distances, drifts_h, drifts_hp, ics = [], [], [], []
    for _ in range(cc.n_trajectories):
        x0, v0 = rng.uniform(-cc.x0_range, cc.x0_range), rng.uniform(-cc.v0_range, cc.v0_range)
        ics.append([x0, v0])
        distances.append(s_equivalence_distance(ctx.base, ctx.prime, x0, v0, t_span, cc.tol,
                                                cc.n_samples))
        tr = integrate(normal_form(ctx.base), x0, v0, t_span, cc.tol,
                       np.linspace(*t_span, cc.n_samples))
        drifts_h.append(conservation_drift(tr, H))
        drifts_hp.append(conservation_drift(tr, Hp))
    x0, v0 = ics[0]
    t_eval = np.linspace(*t_span, cc.n_samples)
    files = [ctx.write("trajectory", "trajectory_L.csv",
                       integrate(normal_form(ctx.base), x0, v0, t_span, cc.tol, t_eval)),
             ctx.write("trajectory", "trajectory_Lprime.csv",
                       integrate(normal_form(ctx.prime), x0, v0, t_span, cc.tol, t_eval))]
    X, Vv = np.meshgrid(np.linspace(-cc.x0_range, cc.x0_range, 50),
                        np.linspace(-cc.v0_range, cc.v0_range, 50), indexing="ij")
    G = ctx.prime.d2_dv2(X, Vv)
    ok = np.abs(G) > 0.1
    f_base = normal_form(ctx.base)(X[ok], Vv[ok])
    f_prime = normal_form(ctx.prime)(X[ok], Vv[ok])
    return {
        "initial_conditions": ics,
        "distances": distances,
        "max_distance": max(distances),
        "max_energy_drift_H": max(drifts_h),
        "max_energy_drift_Hprime": max(drifts_hp),
        "vector_field_max_difference": float(np.max(np.abs(f_base - f_prime))),
        "construction": _construction_check(ctx, rng, cc.n_construction_points),
        "files": [f for f in files if f],
    }


# momentum-check

def _log2_ratio(a, b):
    return math.log2(abs(a / b)) if a and b else None


def _momentum_for(V, mc, rng):
    p = rng.uniform(-1e6, 1e6, mc.n_random)
    v = invert_momentum(p, V)
    roundtrip = float(np.max(np.abs(conjugate_momentum(0.0, v, V) - p) / (1 + np.abs(p))))
    oddness = float(np.max(np.abs(invert_momentum(-p, V) + v)))

    # points are given in the scaled variable p / V^(3/2)
    scale = V**1.5
    sp = [scale * s for s in mc.series_points]
    series_res = [series_velocity(q, V, 7) - invert_momentum(q, V) for q in sp]
    hp = [scale * s for s in mc.hprime_points]
    hprime_res = [exact_hprime(q, V) - hprime_series(q, V) for q in hp]

    # fifth-order coefficient of the log approximant, read off numerically
    q = 1e-2 * scale
    y = q / V
    third = y - y**3 / (6 * V)
    log_c5 = (log_approx_velocity(q, V) - third) / (y**5 / V**2)
    series_c5 = (series_velocity(q, V, 5) - third) / (y**5 / V**2)

    pde = [pde_residual(V, mc.pde_p, h) for h in mc.pde_steps]
    asym = []
    for q in mc.asymptotic_p:
        exact = exact_hprime(q, V)
        both = asymptotic_hprime(q, V, mc.a)
        asym.append({"p": q, "exact": exact, "printed": both.printed, "derived": both.derived,
                     "exact_minus_printed": exact - both.printed,
                     "exact_minus_derived": exact - both.derived,
                     "velocity_rel_error": abs(asymptotic_velocity(q, V) / invert_momentum(q, V) - 1)})
    return {
        "V": V,
        "roundtrip_max_rel": roundtrip,
        "odd_symmetry_max": oddness,
        "series": {"points": sp, "residuals": series_res,
                   "log2_ratios": [_log2_ratio(a, b) for a, b in zip(series_res, series_res[1:])]},
        "hprime_series": {"points": hp, "residuals": hprime_res,
                          "log2_ratios": [_log2_ratio(a, b) for a, b in zip(hprime_res, hprime_res[1:])]},
        "log_approx": {"fifth_order_numeric": log_c5, "series_fifth_order_numeric": series_c5,
                       "sign_discrepancy": bool(np.sign(log_c5) != np.sign(series_c5))},
        "pde": {"p": mc.pde_p, "steps": list(mc.pde_steps), "residuals": pde,
                "ratios": [a / b for a, b in zip(pde, pde[1:])]},
        "asymptotics": asym,
    }


def run_momentum(ctx, rng):
    mc = ctx.config.momentum
    return {
        "series_coefficients": [str(c) for c in SERIES_COEFFICIENTS],
        "log_approx_coefficients": [str(c) for c in log_approx_coefficients()],
        "power_law": {"coefficient": ASYMPTOTIC.hprime_coefficient,
                      "balance_defect": ASYMPTOTIC.balance_defect(),
                      "p": mc.power_law_p, "residual": power_law_pde_residual(mc.power_law_p)},
        "p23_coefficient": {"printed": ASYMPTOTIC.printed_correction,
                            "derived": ASYMPTOTIC.derived_correction,
                            "difference": ASYMPTOTIC.printed_correction - ASYMPTOTIC.derived_correction},
        "per_potential_value": [_momentum_for(V, mc, rng) for V in mc.V_values],
    }


# spectrum

def run_spectrum(ctx):
    k = ctx.config.spectrum.n_levels
    H = ctx.operator("H")
    Hs = ctx.operator("Hprime-spectral")
    out = {"grid": ctx.config.grid.describe(),
           "potential": ctx.potential.describe(),
           "H": {"levels": H.eigenvalues(k).tolist(), "hermiticity_defect": H.hermiticity_defect},
           "Hprime_spectral": {"levels": Hs.eigenvalues(k).tolist(),
                               "hermiticity_defect": Hs.hermiticity_defect,
                               "commutator_with_H": commutator_norm(Hs, H),
                               "commutator_with_H_relative": commutator_norm(Hs, H, relative=True)}}
    V = ctx.potential
    if V.kind == "harmonic":
        omega = V.params["omega"]
        exact = (np.arange(k) + 0.5) * abs(omega) + V.shift
        out["H"]["harmonic_level_errors"] = (H.eigenvalues(k) - exact).tolist()
        out["Hprime_spectral"]["harmonic_level_errors"] = (Hs.eigenvalues(k) - 0.5 * exact**2).tolist()
    if float(np.min(V(ctx.config.grid.points))) > 0:
        Ho = ctx.operator("Hprime-ordered")
        diff = Ho.matrix - Hs.matrix
        out["Hprime_ordered"] = {
            "levels": Ho.eigenvalues(k).tolist(),
            "hermiticity_defect": Ho.hermiticity_defect,
            "commutator_with_H": commutator_norm(Ho, H),
            "commutator_with_H_relative": commutator_norm(Ho, H, relative=True),
            "max_entry_difference_from_spectral": float(np.max(np.abs(diff))),
            "spectral_norm_difference_from_spectral": float(np.linalg.norm(diff, 2)),
        }
    else:
        out["Hprime_ordered"] = {"skipped": "V is not positive on every grid node"}
    return out


# lattices

_REFERENCE_OPERATOR = {"spectral-H": "H", "spectral-Hprime": "Hprime-spectral",
                       "ordered-Hprime": "Hprime-ordered"}


def _kernel_spec(ctx, kc: KernelConfig):
    return KernelSpec(kc.lagrangian, ctx.potential, kc.t_total / kc.n_list[0], kc.mode,
                      kc.normalization, kc.epsilon, kc.potential_point, kc.literal_printed)


def _kernel_label(i, kc):
    return f"kernel{i}_{kc.lagrangian}_{kc.mode}_{kc.normalization}"


def _energy_or_none(amp, method):
    try:
        return implied_ground_energy(amp, method)
    except (SequivError, ValueError, OverflowError):
        return None


def run_kernel(ctx, i, kc: KernelConfig):
    spec = _kernel_spec(ctx, kc)
    grid = ctx.config.grid
    mask = grid.interior_mask(ctx.config.output.interior_fraction)
    label = _kernel_label(i, kc)
    eps = kc.epsilon if kc.mode == REAL_TIME else 0.0
    result = {"label": label, "spec": spec.describe(), "t_total": kc.t_total,
              "n_list": list(kc.n_list), "references": {}}
    rows = []
    studies = []
    for ref_name in kc.references:
        ref = spectral_propagator(ctx.operator(_REFERENCE_OPERATOR[ref_name]), kc.t_total,
                                  kc.mode, epsilon=eps)
        study = convergence_study(spec, grid, ref, kc.n_list, ctx.config.output.interior_fraction)
        studies.append(study)
        table = []
        for n, err, amp in zip(study.n_list, study.errors, study.amplitudes):
            m = compare_amplitudes(amp.matrix, ref.density, kc.mode, mask)
            entry = {"n": n, "error": err, "rel_frobenius": m.rel_frobenius,
                     "phase_aligned": m.phase_aligned, "reliable": amp.reliable,
                     "boundary_mass": amp.boundary_mass}
            table.append(entry)
            rows.append((n, err, ref_name))
        result["references"][ref_name] = {
            "table": table, "order": study.order, "order_note": study.note,
            "monotone": bool(all(a > b for a, b in zip(study.errors, study.errors[1:]))),
        }
        if ctx.config.output.dump_matrices and ctx.out_dir is not None:
            ctx.write("matrix", f"{label}_reference_{ref_name}.csv", ref.density, grid.dx, kc.mode,
                      source=ref.source, t=kc.t_total)
            last = study.amplitudes[-1]
            ctx.write("matrix", f"{label}_n{last.n_steps}.csv", last.matrix, grid.dx, kc.mode,
                      source=last.source, t=kc.t_total)
    if studies and kc.mode == EUCLIDEAN:
        amps = studies[0].amplitudes
        result["implied_ground_energy"] = [_energy_or_none(a, "eigen") for a in amps]
        result["implied_ground_energy_trace"] = [_energy_or_none(a, "trace") for a in amps]
    result["file"] = ctx.write("csv", f"{label}.csv", ("n", "error", "reference"), rows)
    return result


def run_lattices(ctx, which):
    out = []
    for i, kc in enumerate(ctx.config.kernels):
        if kc.lagrangian != which:
            continue
        res = run_kernel(ctx, i, kc)
        if which == L_BASE and "spectral-H" in res["references"]:
            ref = res["references"]["spectral-H"]
            lo, hi = CONTROL_ORDER_WINDOW
            if kc.mode == EUCLIDEAN:
                res["control_pass"] = ref["order"] is not None and lo <= ref["order"] <= hi
            else:
                res["control_pass"] = ref["monotone"]
        out.append(res)
    return {"kernels": out}


def run(config: ExperimentConfig, out_dir=None, only=None) -> ComparisonReport:
    """Run the configured sub-experiments and write the report files.

    ``out_dir=False`` skips all file output. ``only`` restricts the run to
    the given sub-experiment names. Failures in
    one sub-experiment are recorded and the rest still run; the report is
    then marked partial.
    """
    if out_dir is False:
        out_dir = None
    else:
        out_dir = Path(config.output.dir if out_dir is None else out_dir)
    selected = [s for s in config.sub_experiments if only is None or s in only]
    report = ComparisonReport(name=config.name, config=_clean(config.raw), sub_experiments=selected,
                              environment=environment_info())
    started = time.time()
    timings = {}
    try:
        ctx = _Context(config, out_dir)
    except SequivError as exc:
        report.errors["setup"] = f"{type(exc).__name__}: {exc}"
        report.partial = True
        ctx = None
    if ctx is not None:
        report.sections["potential"] = ctx.potential.describe()
        steps = {
            "classical-check": lambda: run_classical(ctx, np.random.default_rng(config.seed)),
            "momentum-check": lambda: run_momentum(ctx, np.random.default_rng(config.seed + 1)),
            "spectrum": lambda: run_spectrum(ctx),
            "lattice-vs-spectral": lambda: run_lattices(ctx, L_BASE),
            "lprime-comparison": lambda: run_lattices(ctx, L_PRIME),
        }
        for name in selected:
            t0 = time.time()
            try:
                report.sections[name] = _clean(steps[name]())
            except Exception as exc:  # noqa: BLE001 - recorded in the partial report
                log.error("sub-experiment %s failed: %s", name, exc)
                report.errors[name] = f"{type(exc).__name__}: {exc}"
                report.partial = True
            timings[name] = time.time() - t0
    if out_dir is not None:
        write_json(out_dir / "report.json", report.to_dict())
        write_json(out_dir / "metadata.json", _clean({
            "started": time.strftime("%Y-%m-%dT%H:%M:%S%z", time.localtime(started)),
            "elapsed_seconds": time.time() - started, "timings": timings,
            "host": platform.node(), "platform": platform.platform()}))
    return report
