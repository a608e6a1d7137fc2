"""
Solution validation engine.

Recomputes the mode transformation of a stored solution, re-derives its
metrics and checks window convergence plus the transform invariants.
"""

from __future__ import annotations

import math

from app.config import (
    CONVERGENCE_TOL,
    INTERIOR_NORM_FLOOR,
    METRIC_TOL,
    QUALITY_THRESHOLDS,
)
from app.exceptions import QfpError
from app.schemas import GateMetrics, SolutionDocument, ValidationCheck, ValidationReport
from app.services.metrics_engine import TargetUnitary, gate_metrics
from app.services.qfp_engine import compose_qfp, window_convergence


def quality_grade(fidelity: float) -> str:
    """Return the quality label for *fidelity*."""
    infidelity = max(1.0 - fidelity, 1e-16)
    exponent = -math.log10(infidelity)
    for threshold, label in QUALITY_THRESHOLDS:
        if exponent >= threshold:
            return label
    return QUALITY_THRESHOLDS[-1][1]


def _metric_check(stored: GateMetrics, fresh: GateMetrics) -> ValidationCheck:
    diffs = {
        "fidelity": abs(stored.fidelity - fresh.fidelity),
        "success_prob": abs(stored.success_prob - fresh.success_prob),
        "cost": abs(stored.cost - fresh.cost),
    }
    bad = {k: v for k, v in diffs.items() if v > METRIC_TOL}
    if not bad:
        return ValidationCheck(name="metrics_match", passed=True, detail="stored metrics reproduced")
    detail = "; ".join(
        f"{k}: stored {getattr(stored, k):.12g} vs recomputed {getattr(fresh, k):.12g}"
        for k in bad
    )
    return ValidationCheck(name="metrics_match", passed=False, detail=f"metric mismatch: {detail}")


def validate_solution(doc: SolutionDocument) -> ValidationReport:
    """Run every consistency check on *doc*; the report passes iff all checks do."""
    checks: list[ValidationCheck] = []
    config = doc.config

    try:
        target = TargetUnitary.from_document(doc.target)
        checks.append(ValidationCheck(name="target_unitary", passed=True))
    except ValueError as exc:
        checks.append(ValidationCheck(name="target_unitary", passed=False, detail=str(exc)))
        return ValidationReport(passed=False, checks=checks)

    try:
        w = compose_qfp(config)
        checks.append(ValidationCheck(
            name="column_norms",
            passed=True,
            detail=f"max column norm {float(w.column_norms().max()):.12g}",
        ))
    except QfpError as exc:
        checks.append(ValidationCheck(name="column_norms", passed=False, detail=str(exc)))
        return ValidationReport(passed=False, checks=checks)

    if config.shaper.phase_only:
        guard = config.grid.guard_bins
        interior = w.interior_column_norms(guard)
        low = float(interior.min()) if interior.size else 1.0
        checks.append(ValidationCheck(
            name="interior_columns",
            passed=low >= 1.0 - INTERIOR_NORM_FLOOR,
            detail=f"min interior column norm {low:.12g}",
        ))

    drift = window_convergence(config)
    checks.append(ValidationCheck(
        name="window_convergence",
        passed=drift <= CONVERGENCE_TOL,
        detail=f"max change {drift:.3e} after doubling the guard band",
    ))

    fresh: GateMetrics | None = None
    try:
        fresh = gate_metrics(w, target)
        checks.append(ValidationCheck(name="bin_assignment", passed=True))
        checks.append(_metric_check(doc.metrics, fresh))
    except QfpError as exc:
        checks.append(ValidationCheck(name="bin_assignment", passed=False, detail=str(exc)))

    return ValidationReport(
        passed=all(c.passed for c in checks),
        checks=checks,
        metrics=fresh,
        quality=quality_grade(fresh.fidelity) if fresh else None,
    )
