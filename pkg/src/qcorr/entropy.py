"""Shannon and von Neumann entropies, quantum mutual information, entropy balance.

All logarithms are base 2, so every quantity is in bits.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericalContractError, UsageError
from .qmath import PSD_TOL, DensityOperator, PureState, density_from_pure, hermitian_eigenvalues, partial_trace

PROB_TOL = 1e-12
SUM_TOL = 1e-9


def _xlog2x(p: np.ndarray) -> np.ndarray:
    """Elementwise p*log2(p) with 0*log 0 = 0."""
    p = np.asarray(p, dtype=float)
    out = np.zeros_like(p)
    pos = p > 0
    out[pos] = p[pos] * np.log2(p[pos])
    return out


def check_probabilities(p) -> np.ndarray:
    """Validate a probability vector and clamp tiny negatives to zero."""
    p = np.asarray(p, dtype=float).ravel()
    if p.size == 0 or not np.all(np.isfinite(p)):
        raise UsageError("probability vector must be non-empty and finite")
    if np.any(p < -PROB_TOL) or np.any(p > 1 + PROB_TOL):
        raise UsageError(f"probabilities outside [0, 1]: {p}")
    if abs(p.sum() - 1.0) > SUM_TOL:
        raise UsageError(f"probabilities sum to {p.sum()!r}, not 1")
    return np.clip(p, 0.0, 1.0)


def shannon(p) -> float:
    p = check_probabilities(p)
    return float(max(-np.sum(_xlog2x(p)), 0.0))


def binary_entropy(p: float) -> float:
    """h(p) = -p log p - (1-p) log(1-p)."""
    if not -PROB_TOL <= p <= 1 + PROB_TOL:
        raise UsageError(f"binary entropy needs p in [0, 1], got {p}")
    p = min(max(float(p), 0.0), 1.0)
    # evaluate on the smaller branch so h(p) and h(1-p) round identically
    q = min(p, 1.0 - p)
    return float(-(_xlog2x(np.array([q, 1.0 - q])).sum()))


def spectrum(rho: DensityOperator) -> np.ndarray:
    """Eigenvalues of ``rho`` clamped to [0, 1]; loud failure below -1e-10."""
    vals = hermitian_eigenvalues(rho.matrix)
    if vals[-1] < -PSD_TOL:
        raise NumericalContractError(f"negative eigenvalue {vals[-1]!r}")
    return np.clip(vals, 0.0, 1.0)


def von_neumann(rho: DensityOperator) -> float:
    lam = spectrum(rho)
    return float(max(-np.sum(_xlog2x(lam)), 0.0))


def quantum_mutual_information(rho: DensityOperator, a: str = "A", c: str = "C") -> float:
    """I_q(a:c) = S(rho_a) + S(rho_c) - S(rho_ac).

    ``rho`` may carry extra subsystems; they are traced out first.
    """
    if a == c:
        raise UsageError("mutual information needs two distinct subsystems")
    rho_ac = partial_trace(rho, {a, c}) if set(rho.layout.labels) != {a, c} else rho
    return (
        von_neumann(partial_trace(rho_ac, {a}))
        + von_neumann(partial_trace(rho_ac, {c}))
        - von_neumann(rho_ac)
    )


@dataclass(frozen=True)
class EntropyDelta:
    """Changes of local entropies and of I_q(A:C) across an event, in bits."""

    ds_a: float
    ds_c: float
    ds_r: float
    d_iq: float

    @property
    def residual(self) -> float:
        return self.d_iq - (self.ds_a + self.ds_c - self.ds_r)


def local_entropies(state: PureState, labels=("A", "C", "R")) -> dict[str, float]:
    rho = density_from_pure(state)
    return {lab: von_neumann(partial_trace(rho, {lab})) for lab in labels}


def entropy_balance(before: PureState, after: PureState, labels=("A", "C", "R")) -> EntropyDelta:
    """Entropy deltas for an event taking ``before`` to ``after``.

    Every delta comes from its own partial traces, so ``residual`` is a
    genuine check that dS_A + dS_C - dS_R = dI_q(A:C) for pure global states.
    """
    if before.layout != after.layout:
        raise UsageError("before and after states have different layouts")
    a, c, r = labels
    for lab in labels:
        before.layout.index(lab)
    s0 = local_entropies(before, labels)
    s1 = local_entropies(after, labels)
    iq0 = quantum_mutual_information(density_from_pure(before), a, c)
    iq1 = quantum_mutual_information(density_from_pure(after), a, c)
    return EntropyDelta(
        ds_a=s1[a] - s0[a],
        ds_c=s1[c] - s0[c],
        ds_r=s1[r] - s0[r],
        d_iq=iq1 - iq0,
    )
