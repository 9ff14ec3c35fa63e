"""Kraus channels and the gates used by the scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NumericalContractError, UsageError
from .qmath import I2, Z, DensityOperator, Layout, embed

COMPLETENESS_TOL = 1e-10


@dataclass(frozen=True)
class KrausChannel:
    kraus_ops: tuple[np.ndarray, ...]
    target: tuple[str, ...]

    def __post_init__(self):
        ops = tuple(np.array(k, dtype=complex) for k in self.kraus_ops)
        if not ops:
            raise UsageError("a channel needs at least one Kraus operator")
        d = ops[0].shape[0]
        if any(k.shape != (d, d) for k in ops):
            raise UsageError("Kraus operators must share one square shape")
        if np.max(np.abs(sum(k.conj().T @ k for k in ops) - np.eye(d))) > COMPLETENESS_TOL:
            raise NumericalContractError("Kraus operators are not trace preserving")
        for k in ops:
            k.setflags(write=False)
        object.__setattr__(self, "kraus_ops", ops)
        object.__setattr__(self, "target", tuple(self.target))


def dephasing(p: float, target: str) -> KrausChannel:
    """rho -> (1-p) rho + p Z rho Z on ``target``."""
    if not 0.0 <= p <= 1.0:
        raise UsageError(f"dephasing probability must lie in [0, 1], got {p}")
    return KrausChannel((math.sqrt(1 - p) * I2, math.sqrt(p) * Z), (target,))


def apply_channel(rho: DensityOperator, ch: KrausChannel) -> DensityOperator:
    out = np.zeros_like(rho.matrix)
    for k in ch.kraus_ops:
        full = embed(k, ch.target, rho.layout)
        out += full @ rho.matrix @ full.conj().T
    return DensityOperator(out, rho.layout)


def cnot(control: str, target: str, layout: Layout) -> np.ndarray:
    """Full-space CNOT flipping ``target`` where ``control`` is 1."""
    if control == target:
        raise UsageError("control and target must differ")
    ci, ti = layout.index(control), layout.index(target)
    if layout.dims[ci] != 2 or layout.dims[ti] != 2:
        raise UsageError("CNOT acts on qubits only")
    d = layout.dim
    u = np.zeros((d, d), dtype=complex)
    for col in range(d):
        digits = list(np.unravel_index(col, layout.dims))
        if digits[ci] == 1:
            digits[ti] ^= 1
        u[np.ravel_multi_index(digits, layout.dims), col] = 1.0
    return u
