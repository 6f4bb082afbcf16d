"""End-to-end runs: hypothesis gate, domain certificate, flow samples, verification."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .analysis import (
    critical_samples,
    grad_comparability_scan,
    loja_gradient_scan,
    scaling_suite,
)
from .flow import FlowConfig, Status, integrate_backward, conservation_drift, integrate
from .germ import GermCase, HypothesisReport, check_hypotheses, lemma1_check
from .grid import CUBE, SHELLS, SampleGrid
from .homotopy import DomainCertificate, HomotopyField, certify_domain

RESIDUAL_TOL = 1e-7
DRIFT_TOL = 1e-8
ROUNDTRIP_TOL = 1e-6
SHELL_FRACTIONS = (0.2, 0.4, 0.6, 0.8, 1.0)

PASS = "pass"
HYPOTHESIS_FAIL = "hypothesis_fail"
DOMAIN_FAIL = "domain_fail"
NUMERIC_FAIL = "numeric_fail"
VERIFICATION_FAIL = "verification_fail"

EXIT_CODES = {PASS: 0, HYPOTHESIS_FAIL: 2, DOMAIN_FAIL: 3, NUMERIC_FAIL: 4, VERIFICATION_FAIL: 5}


def default_sample_set(n: int, radius: float, seed: int = 42, n_random: int = 20) -> np.ndarray:
    """Signed axis points on five concentric spheres plus seeded points in the ball."""
    axes = np.vstack([np.eye(n), -np.eye(n)])
    shells = np.vstack([frac * radius * axes for frac in SHELL_FRACTIONS])
    rng = np.random.default_rng(seed)
    dirs = rng.standard_normal((n_random, n))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    rad = radius * rng.random(n_random) ** (1.0 / n)
    return np.vstack([shells, dirs * rad[:, None]])


@dataclass
class SampleResult:
    x: np.ndarray
    status: str
    phi_x: Optional[np.ndarray]
    residual: Optional[float]
    drift: float
    roundtrip: Optional[float]
    steps: int
    t_end: float
    rows: list = field(default_factory=list)

    @property
    def ok(self) -> bool:
        if self.status != Status.completed.value or self.phi_x is None:
            return False
        scale = max(1.0, abs(self.rows[0][-2])) if self.rows else 1.0
        xn = float(np.linalg.norm(self.x))
        return (
            self.residual <= RESIDUAL_TOL
            and self.drift <= DRIFT_TOL * scale
            and self.roundtrip is not None
            and self.roundtrip <= ROUNDTRIP_TOL * (1 + xn)
        )

    def to_dict(self, with_trajectory: bool = True) -> dict:
        out = {
            "x": self.x.tolist(),
            "status": self.status,
            "phi_x": None if self.phi_x is None else self.phi_x.tolist(),
            "residual": self.residual,
            "drift": self.drift,
            "roundtrip": self.roundtrip,
            "steps": self.steps,
            "t_end": self.t_end,
            "ok": self.ok,
        }
        if with_trajectory:
            out["trajectory"] = self.rows
        return out


def run_sample(field: HomotopyField, x, config: FlowConfig) -> SampleResult:
    x = np.asarray(x, dtype=float)
    traj = integrate(field, x, config)
    drift = conservation_drift(traj)
    rows = traj.rows()
    if not traj.completed:
        return SampleResult(x, traj.status.value, None, None, drift, None,
                            len(traj.states) - 1, traj.final.t, rows)
    y = traj.final.y
    case = field.case
    residual = abs(case.g.eval(y) - case.f.eval(x))
    back = integrate_backward(field, y, config)
    roundtrip = float(np.linalg.norm(back.final.y - x)) if back.completed else None
    return SampleResult(x, traj.status.value, y.copy(), residual, drift, roundtrip,
                        len(traj.states) - 1, traj.final.t, rows)


@dataclass
class RunReport:
    case: GermCase
    hypothesis: HypothesisReport
    forced: bool = False
    certificate: Optional[DomainCertificate] = None
    samples: list = field(default_factory=list)
    origin_fixed: Optional[bool] = None
    scaling: list = field(default_factory=list)
    loja: Optional[object] = None
    lemma1: Optional[object] = None
    comparability: Optional[dict] = None
    verdict: str = PASS

    @property
    def exit_code(self) -> int:
        return EXIT_CODES[self.verdict]

    def to_dict(self, with_trajectories: bool = True) -> dict:
        c = self.case
        names = c.names
        return {
            "case": c.label,
            "vars": names,
            "f": c.f.to_string(names),
            "g": c.g.to_string(names),
            "h": None if c.h is None else c.h.to_string(names),
            "r": c.r,
            "verdict": self.verdict,
            "forced": self.forced,
            "hypothesis": self.hypothesis.to_dict(names),
            "certificate": None if self.certificate is None else self.certificate.to_dict(),
            "origin_fixed": self.origin_fixed,
            "samples": [s.to_dict(with_trajectories) for s in self.samples],
            "scaling": [s.to_dict() for s in self.scaling],
            "loja": None if self.loja is None else self.loja.to_dict(),
            "lemma1": None if self.lemma1 is None else self.lemma1.to_dict(),
            "comparability": self.comparability,
        }


def run_construct(
    case: GermCase,
    radius: float = 0.3,
    grid: int = 41,
    config: FlowConfig | None = None,
    force: bool = False,
    seed: int = 42,
    samples: np.ndarray | None = None,
) -> RunReport:
    """Gate, certify, then integrate phi on the sample set.

    A failed hypothesis stops here unless ``force``; forcing never upgrades the
    verdict, it only lets the construction show how it fails.
    """
    config = config or FlowConfig()
    hyp = check_hypotheses(case)
    report = RunReport(case=case, hypothesis=hyp, forced=force)
    if not hyp.ok and not force:
        report.verdict = HYPOTHESIS_FAIL
        return report

    field_ = HomotopyField(case)
    report.certificate = certify_domain(field_, radius, SampleGrid(radius, grid, CUBE))
    if samples is None:
        samples = default_sample_set(case.n, radius, seed)
    report.samples = [run_sample(field_, x, config) for x in samples]
    y0 = integrate(field_, np.zeros(case.n), config)
    report.origin_fixed = bool(y0.completed and np.all(y0.final.y == 0.0))

    if not report.certificate.ok:
        report.verdict = DOMAIN_FAIL
    elif not (all(s.ok for s in report.samples) and report.origin_fixed):
        report.verdict = NUMERIC_FAIL
    elif not hyp.ok:
        report.verdict = HYPOTHESIS_FAIL
    else:
        report.verdict = PASS
    return report


def run_verify(
    case: GermCase,
    radius: float = 0.3,
    grid: int = 41,
    config: FlowConfig | None = None,
    force: bool = False,
    seed: int = 42,
    alpha_max: int | None = None,
) -> RunReport:
    """Construction plus every estimate check; verification failures map to exit 5."""
    report = run_construct(case, radius, grid, config, force, seed)
    if report.verdict == HYPOTHESIS_FAIL and not force:
        return report
    field_ = HomotopyField(case)
    shells = SampleGrid(radius, 25, SHELLS)
    z = critical_samples(case.f, radius)
    report.loja = loja_gradient_scan(case.f, shells)
    try:
        report.scaling = scaling_suite(field_, shells, alpha_max, z_samples=z)
        scaling_ok = all(s.pass_ for s in report.scaling)
    except ValueError:
        report.scaling = []
        scaling_ok = False
    c1, c3, comp_ok = grad_comparability_scan(field_, SampleGrid(radius, grid, SHELLS))
    report.comparability = {"C1_hat": c1, "C3_hat": c3, "pass": comp_ok}
    lemma_ok = False
    if report.hypothesis.membership:
        report.lemma1 = lemma1_check(case.g - case.f, case.f, case.r + 2, case.r,
                                     SampleGrid(radius, grid, CUBE))
        lemma_ok = report.lemma1.ok
    if report.verdict == PASS and not (report.loja.ok and scaling_ok and comp_ok and lemma_ok):
        report.verdict = VERIFICATION_FAIL
    return report
