"""Distances between transition-amplitude matrices."""

from __future__ import annotations

from dataclasses import asdict, dataclass

import numpy as np

from .models import REAL_TIME, TIME_MODES


@dataclass(frozen=True)
class AmplitudeMetrics:
    max_abs: float
    rel_frobenius: float
    phase_aligned: float | None

    def as_dict(self):
        return asdict(self)


def compare_amplitudes(A, B, mode=REAL_TIME, interior=None) -> AmplitudeMetrics:
    """Compare two amplitude matrices on the nodes selected by ``interior``.

    ``rel_frobenius`` is ||A - B|| / ||B||. ``phase_aligned`` is the same
    distance after rotating B by the global phase minimising it, i.e. the
    phase of <B, A>; it is only reported in real time.
    """
    A = np.asarray(A)
    B = np.asarray(B)
    if A.shape != B.shape:
        raise ValueError(f"shape mismatch {A.shape} vs {B.shape}")
    if mode not in TIME_MODES:
        raise ValueError(f"unknown mode {mode!r}")
    if interior is not None:
        sub = np.ix_(interior, interior)
        A, B = A[sub], B[sub]
    diff = A - B
    norm_b = np.linalg.norm(B)
    scale = norm_b if norm_b > 0 else 1.0
    max_abs = float(np.max(np.abs(diff))) if diff.size else 0.0
    rel = float(np.linalg.norm(diff) / scale)
    aligned = None
    if mode == REAL_TIME:
        overlap = np.vdot(B, A)
        phase = overlap / abs(overlap) if abs(overlap) > 0 else 1.0
        aligned = float(min(np.linalg.norm(A - phase * B) / scale, rel))
    return AmplitudeMetrics(max_abs, rel, aligned)

