"""
Dense complex linear algebra for few-qubit composite systems.

Operators are plain ``numpy`` complex arrays. Composite structure is carried
by :class:`Layout`; the leftmost label is the most significant digit of the
computational-basis index, so on layout ``(A, C, R)`` the basis string
``"001"`` means A=0, C=0, R=1.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod
from typing import Iterable, Sequence

import numpy as np

from .errors import NumericalContractError, UsageError

HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
NORM_TOL = 1e-12
UNITARY_TOL = 1e-10

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (X, Y, Z)


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class Layout:
    """Ordered subsystem labels with their local dimensions."""

    labels: tuple[str, ...]
    dims: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "dims", tuple(int(d) for d in self.dims))
        if len(self.labels) != len(self.dims) or not self.labels:
            raise UsageError("layout needs one dimension per label")
        if len(set(self.labels)) != len(self.labels):
            raise UsageError(f"duplicate labels in layout {self.labels}")
        if any(d < 1 for d in self.dims):
            raise UsageError("subsystem dimensions must be positive")

    @classmethod
    def qubits(cls, *labels: str) -> "Layout":
        return cls(tuple(labels), (2,) * len(labels))

    @property
    def dim(self) -> int:
        return prod(self.dims)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise UsageError(f"unknown subsystem label {label!r}; layout has {self.labels}") from None

    def sub(self, labels: Iterable[str]) -> "Layout":
        """Sub-layout on ``labels``, kept in this layout's order."""
        wanted = set(labels)
        for lab in wanted:
            self.index(lab)
        keep = [i for i, lab in enumerate(self.labels) if lab in wanted]
        return Layout(tuple(self.labels[i] for i in keep), tuple(self.dims[i] for i in keep))


@dataclass(frozen=True)
class PureState:
    amplitudes: np.ndarray
    layout: Layout

    def __post_init__(self):
        amp = _frozen(np.ravel(self.amplitudes))
        if amp.shape[0] != self.layout.dim:
            raise UsageError(f"state has {amp.shape[0]} amplitudes, layout expects {self.layout.dim}")
        if not np.all(np.isfinite(amp)):
            raise NumericalContractError("non-finite amplitude")
        norm = np.linalg.norm(amp)
        if abs(norm - 1.0) > NORM_TOL:
            raise NumericalContractError(f"state norm {norm!r} differs from 1")
        object.__setattr__(self, "amplitudes", amp)

    @classmethod
    def from_amplitudes(cls, amplitudes, layout: Layout) -> "PureState":
        """Normalise ``amplitudes`` and wrap them."""
        amp = np.asarray(amplitudes, dtype=complex).ravel()
        norm = np.linalg.norm(amp)
        if norm == 0:
            raise UsageError("zero vector cannot be normalised")
        return cls(amp / norm, layout)

    @classmethod
    def from_terms(cls, terms: dict[str, complex], layout: Layout) -> "PureState":
        """Build a normalised state from basis strings, e.g. ``{"001": 1, "010": 1}``."""
        amp = np.zeros(layout.dim, dtype=complex)
        for bits, c in terms.items():
            amp[basis_index(bits, layout)] += c
        return cls.from_amplitudes(amp, layout)


@dataclass(frozen=True)
class DensityOperator:
    matrix: np.ndarray
    layout: Layout

    def __post_init__(self):
        m = _frozen(self.matrix)
        d = self.layout.dim
        if m.shape != (d, d):
            raise UsageError(f"density has shape {m.shape}, layout expects {(d, d)}")
        if not np.all(np.isfinite(m)):
            raise NumericalContractError("non-finite density entry")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise NumericalContractError("density operator is not Hermitian")
        tr = np.trace(m).real
        if abs(tr - 1.0) > TRACE_TOL:
            raise NumericalContractError(f"density trace {tr!r} differs from 1")
        if hermitian_eigenvalues(m)[-1] < -PSD_TOL:
            raise NumericalContractError("density operator has a negative eigenvalue")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.layout.dim


def basis_index(bits: str, layout: Layout) -> int:
    if len(bits) != len(layout.dims):
        raise UsageError(f"basis string {bits!r} does not match layout {layout.labels}")
    idx = 0
    for ch, d in zip(bits, layout.dims):
        k = int(ch)
        if not 0 <= k < d:
            raise UsageError(f"digit {ch} out of range for local dimension {d}")
        idx = idx * d + k
    return idx


def ket(bits: str) -> np.ndarray:
    """Computational-basis qubit ket for a bit string."""
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def tensor(*ops: np.ndarray) -> np.ndarray:
    """Kronecker product; the left factor owns the most significant index."""
    out = np.ones((1, 1), dtype=complex) if np.ndim(ops[0]) == 2 else np.ones(1, dtype=complex)
    for op in ops:
        out = np.kron(out, op)
    return out


def is_unitary(u: np.ndarray, tol: float = UNITARY_TOL) -> bool:
    u = np.asarray(u)
    return u.ndim == 2 and u.shape[0] == u.shape[1] and np.allclose(
        u.conj().T @ u, np.eye(u.shape[0]), rtol=0, atol=tol
    )


def partial_trace(rho: DensityOperator, keep: Iterable[str]) -> DensityOperator:
    keep = set(keep)
    if not keep:
        raise UsageError("partial_trace needs at least one subsystem to keep")
    layout = rho.layout
    out_layout = layout.sub(keep)
    n = len(layout.dims)
    kept = [layout.index(lab) for lab in out_layout.labels]
    t = rho.matrix.reshape(layout.dims + layout.dims)
    # einsum subscripts: row indices 0..n-1, column indices n..2n-1; traced pairs share a letter
    letters = "abcdefghijklmnopqrstuvwxyz"
    row = list(letters[:n])
    col = [letters[n + i] if i in kept else letters[i] for i in range(n)]
    out = "".join(row[i] for i in kept) + "".join(col[i] for i in kept)
    reduced = np.einsum("".join(row) + "".join(col) + "->" + out, t)
    d = out_layout.dim
    return DensityOperator(reduced.reshape(d, d), out_layout)


def permute(rho: DensityOperator, order: Sequence[str]) -> DensityOperator:
    """Reorder the subsystems of ``rho`` to ``order`` (e.g. swap A and C)."""
    layout = rho.layout
    if sorted(order) != sorted(layout.labels):
        raise UsageError(f"{order} is not a permutation of {layout.labels}")
    perm = [layout.index(lab) for lab in order]
    n = len(perm)
    t = rho.matrix.reshape(layout.dims + layout.dims).transpose(perm + [p + n for p in perm])
    return DensityOperator(t.reshape(rho.dim, rho.dim), Layout(tuple(order), tuple(layout.dims[p] for p in perm)))


def jacobi_eigh(op: np.ndarray, tol: float = 1e-15, max_sweeps: int = 50) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic Jacobi diagonalisation of a complex Hermitian matrix.

    Returns ``(values, vectors)`` with values in descending order and
    eigenvectors as columns.
    """
    a = np.array(op, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise UsageError("eigensolver needs a square matrix")
    if not np.all(np.isfinite(a)):
        raise NumericalContractError("non-finite matrix entry")
    if np.max(np.abs(a - a.conj().T), initial=0.0) > HERMITIAN_TOL:
        raise NumericalContractError("matrix is not Hermitian")
    a = (a + a.conj().T) / 2
    n = a.shape[0]
    v = np.eye(n, dtype=complex)
    scale = max(np.linalg.norm(a), 1e-300)

    for _ in range(max_sweeps):
        off = np.linalg.norm(a - np.diag(np.diag(a)))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                b = a[p, q]
                mag = abs(b)
                if mag <= tol * scale * 1e-3:
                    continue
                phase = b / mag
                theta = (a[q, q].real - a[p, p].real) / (2 * mag)
                t = (1.0 if theta >= 0 else -1.0) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                # rotation that first strips the phase of a[p, q], then annihilates it
                j = np.array([[c, s], [-s * phase.conjugate(), c * phase.conjugate()]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ j
                a[idx, :] = j.conj().T @ a[idx, :]
                v[:, idx] = v[:, idx] @ j
                a[p, q] = a[q, p] = 0.0
    else:
        raise NumericalContractError("Jacobi iteration did not converge")

    vals = np.real(np.diag(a))
    order = np.argsort(vals)[::-1]
    return vals[order], v[:, order]


def hermitian_eigenvalues(op: np.ndarray) -> np.ndarray:
    """Real spectrum of a Hermitian matrix, descending. No clamping."""
    a = np.asarray(op)
    if a.shape == (1, 1):
        if abs(a[0, 0].imag) > HERMITIAN_TOL:
            raise NumericalContractError("matrix is not Hermitian")
        return np.array([a[0, 0].real])
    return jacobi_eigh(a)[0]


def embed(u: np.ndarray, targets: Sequence[str], layout: Layout) -> np.ndarray:
    """Full-space operator acting as ``u`` on ``targets`` (in the given order), identity elsewhere."""
    u = np.asarray(u, dtype=complex)
    idx = [layout.index(t) for t in targets]
    if len(set(idx)) != len(idx):
        raise UsageError("repeated target label")
    tdims = [layout.dims[i] for i in idx]
    if u.shape != (prod(tdims), prod(tdims)):
        raise UsageError(f"operator shape {u.shape} does not match targets {tuple(targets)} of dims {tdims}")
    rest = [i for i in range(len(layout.dims)) if i not in idx]
    order = idx + rest
    big = np.kron(u, np.eye(prod(layout.dims[i] for i in rest), dtype=complex))
    # big acts on the permuted ordering (targets first); permute back to the layout ordering
    n = len(layout.dims)
    pdims = [layout.dims[i] for i in order]
    inv = np.argsort(order)
    t = big.reshape(pdims + pdims).transpose(list(inv) + [n + i for i in inv])
    return t.reshape(layout.dim, layout.dim)


def apply_unitary(state: PureState, u: np.ndarray, targets: Sequence[str], layout: Layout | None = None) -> PureState:
    layout = layout or state.layout
    if layout != state.layout:
        raise UsageError("layout does not match the state's layout")
    u = np.asarray(u, dtype=complex)
    if u.ndim != 2 or u.shape[0] != u.shape[1]:
        raise UsageError("gate must be a square matrix")
    full = embed(u, targets, layout)
    if not is_unitary(u):
        raise NumericalContractError("gate is not unitary")
    out = full @ state.amplitudes
    # renormalise away rounding so chained events keep the 1e-12 norm contract
    return PureState(out / np.linalg.norm(out), layout)


def density_from_pure(state: PureState, layout: Layout | None = None) -> DensityOperator:
    layout = layout or state.layout
    psi = state.amplitudes
    return DensityOperator(np.outer(psi, psi.conj()), layout)


def mix(weights: Sequence[float], densities: Sequence[DensityOperator]) -> DensityOperator:
    w = np.asarray(weights, dtype=float)
    if len(w) != len(densities) or len(w) == 0:
        raise UsageError("need one weight per density")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise UsageError(f"weights must be nonnegative and sum to 1, got {list(w)}")
    layout = densities[0].layout
    if any(d.layout != layout for d in densities):
        raise UsageError("densities have different layouts")
    return DensityOperator(sum(wi * d.matrix for wi, d in zip(w, densities)), layout)


def haar_state(rng: np.random.Generator, layout: Layout) -> PureState:
    """Haar-random pure state: normalised vector of standard complex Gaussians."""
    d = layout.dim
    z = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState.from_amplitudes(z, layout)


def haar_unitary(rng: np.random.Generator, dim: int) -> np.ndarray:
    """Haar-random unitary via QR of a Ginibre matrix with the phases of R's diagonal fixed."""
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def random_density(rng: np.random.Generator, layout: Layout, env_dim: int | None = None) -> DensityOperator:
    """Random mixed state: marginal of a Haar-random purification with an ``env_dim`` environment."""
    env_dim = env_dim or layout.dim
    z = rng.standard_normal((layout.dim, env_dim)) + 1j * rng.standard_normal((layout.dim, env_dim))
    m = z @ z.conj().T
    return DensityOperator(m / np.trace(m).real, layout)
