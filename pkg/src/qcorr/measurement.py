"""
Local measurements, joint outcome statistics and classical mutual information.

The optimiser maximises the Shannon mutual information of the outcome
distribution ``P_ij = Tr[(E_i x F_j) rho]`` over local measurement pairs on a
two-qubit state, either over projective measurements (two Bloch directions)
or over rank-1 POVMs with a configurable number of outcomes.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Sequence

import numpy as np
from scipy.optimize import minimize

from .entropy import SUM_TOL, quantum_mutual_information, shannon
from .errors import NumericalContractError, UsageError
from .qmath import HERMITIAN_TOL, I2, PAULIS, PSD_TOL, DensityOperator, hermitian_eigenvalues

COMPLETENESS_TOL = 1e-10
MODES = ("projective", "rank1-povm")

# number of best coarse-grid points handed to the local refinement
_GRID_SEEDS = 4


@dataclass(frozen=True)
class BlochDirection:
    theta: float
    phi: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.theta <= math.pi:
            raise UsageError(f"polar angle {self.theta} outside [0, pi]")
        if not 0.0 <= self.phi < 2 * math.pi:
            raise UsageError(f"azimuth {self.phi} outside [0, 2pi)")

    @classmethod
    def from_vector(cls, n: Sequence[float]) -> "BlochDirection":
        x, y, z = (float(v) for v in n)
        r = math.sqrt(x * x + y * y + z * z)
        if r == 0:
            raise UsageError("zero Bloch vector has no direction")
        theta = math.acos(min(max(z / r, -1.0), 1.0))
        phi = 0.0 if math.hypot(x, y) < 1e-12 * r else math.atan2(y, x) % (2 * math.pi)
        if phi >= 2 * math.pi:
            phi = 0.0
        return cls(theta, phi)

    @classmethod
    def wrapped(cls, theta: float, phi: float) -> "BlochDirection":
        """Direction for arbitrary real angles."""
        return cls.from_vector(_unit(theta, phi))

    @property
    def vector(self) -> np.ndarray:
        return np.array(_unit(self.theta, self.phi))

    def ket(self) -> np.ndarray:
        """|n+> with real first component."""
        return np.array([math.cos(self.theta / 2), complex(math.cos(self.phi), math.sin(self.phi)) * math.sin(self.theta / 2)])


def _unit(theta: float, phi: float) -> tuple[float, float, float]:
    st = math.sin(theta)
    return (st * math.cos(phi), st * math.sin(phi), math.cos(theta))


@dataclass(frozen=True)
class Povm:
    effects: tuple[np.ndarray, ...]

    def __post_init__(self):
        effects = tuple(np.array(e, dtype=complex) for e in self.effects)
        if len(effects) < 2:
            raise UsageError("a POVM needs at least two outcomes")
        d = effects[0].shape[0]
        for e in effects:
            if e.shape != (d, d):
                raise UsageError("POVM effects must share one square shape")
            if np.max(np.abs(e - e.conj().T)) > HERMITIAN_TOL:
                raise NumericalContractError("POVM effect is not Hermitian")
            if hermitian_eigenvalues(e)[-1] < -PSD_TOL:
                raise NumericalContractError("POVM effect is not positive semidefinite")
            e.setflags(write=False)
        if np.max(np.abs(sum(effects) - np.eye(d))) > COMPLETENESS_TOL:
            raise NumericalContractError("POVM effects do not sum to the identity")
        object.__setattr__(self, "effects", effects)

    @property
    def dim(self) -> int:
        return self.effects[0].shape[0]

    @property
    def outcome_count(self) -> int:
        return len(self.effects)

    def relabel(self, order: Sequence[int]) -> "Povm":
        return Povm(tuple(self.effects[i] for i in order))

    def describe(self) -> list[dict]:
        """Weight Tr(E) and Bloch vector Tr(E sigma)/Tr(E) of each qubit effect."""
        out = []
        for e in self.effects:
            w = float(np.trace(e).real)
            n = [float(np.trace(e @ s).real) / w if w > 0 else 0.0 for s in PAULIS]
            out.append({"weight": w, "bloch": n})
        return out


def projective_qubit(d: BlochDirection) -> Povm:
    """{(I + n.sigma)/2, (I - n.sigma)/2} for the unit vector of ``d``."""
    ns = sum(c * s for c, s in zip(d.vector, PAULIS))
    return Povm(((I2 + ns) / 2, (I2 - ns) / 2))


def computational_basis(dim: int = 2) -> Povm:
    return Povm(tuple(np.diag(row).astype(complex) for row in np.eye(dim)))


@dataclass(frozen=True)
class JointDistribution:
    p: np.ndarray

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        if p.ndim != 2:
            raise UsageError("joint distribution must be a matrix")
        if np.any(p < -1e-12):
            raise NumericalContractError(f"negative joint probability {p.min()!r}")
        if abs(p.sum() - 1.0) > SUM_TOL:
            raise NumericalContractError(f"joint distribution sums to {p.sum()!r}")
        p = np.clip(p, 0.0, None)
        p.setflags(write=False)
        object.__setattr__(self, "p", p)

    @property
    def row_marginals(self) -> np.ndarray:
        return self.p.sum(axis=1)

    @property
    def col_marginals(self) -> np.ndarray:
        return self.p.sum(axis=0)

    def mutual_information(self) -> float:
        """H(rows) + H(cols) - H(joint), clipped at zero from below."""
        mi = shannon(self.row_marginals) + shannon(self.col_marginals) - shannon(self.p.ravel())
        return max(mi, 0.0)


def _check_bipartite(rho: DensityOperator, ea: Povm, fc: Povm) -> None:
    if len(rho.layout.dims) != 2:
        raise UsageError(f"need a bipartite state, layout is {rho.layout.labels}")
    if (ea.dim, fc.dim) != rho.layout.dims:
        raise UsageError(f"POVM dimensions {(ea.dim, fc.dim)} do not match layout dims {rho.layout.dims}")


def joint_distribution(rho: DensityOperator, ea: Povm, fc: Povm) -> JointDistribution:
    _check_bipartite(rho, ea, fc)
    da, dc = rho.layout.dims
    # rho indexed [a', c', a, c]; P_ij = sum E_i[a, a'] F_j[c, c'] rho[(a', c'), (a, c)]
    r = rho.matrix.reshape(da, dc, da, dc)
    p = np.einsum("iab,jcd,bdac->ij", np.array(ea.effects), np.array(fc.effects), r)
    if np.max(np.abs(p.imag)) > 1e-10:
        raise NumericalContractError("outcome probabilities have an imaginary part")
    return JointDistribution(p.real)


def classical_mi_for(rho: DensityOperator, ea: Povm, fc: Povm) -> float:
    return joint_distribution(rho, ea, fc).mutual_information()


def _mi_batch(p: np.ndarray) -> np.ndarray:
    """Mutual information of a stack of joint tables shaped (..., m, n)."""
    p = np.clip(p, 0.0, None)

    def ent(q, axes):
        with np.errstate(divide="ignore", invalid="ignore"):
            t = np.where(q > 0, q * np.log2(q), 0.0)
        return -t.sum(axis=axes)

    return ent(p.sum(-1), -1) + ent(p.sum(-2), -1) - ent(p, (-2, -1))


@dataclass(frozen=True)
class OptimizerConfig:
    """Search budget for :func:`optimize_classical_mi`.

    ``refine_iters`` is the Nelder-Mead iteration budget per free parameter.
    """

    grid_steps: int = 64
    restarts: int = 16
    refine_iters: int = 200
    tol: float = 1e-7
    outcomes_a: int = 2
    outcomes_c: int = 2
    mode: str = "projective"
    seed: int = 0

    def __post_init__(self):
        if self.grid_steps < 8:
            raise UsageError("grid_steps must be at least 8")
        if self.restarts < 0 or self.refine_iters < 1 or not self.tol > 0:
            raise UsageError("restarts must be >= 0, refine_iters >= 1 and tol > 0")
        if self.mode not in MODES:
            raise UsageError(f"mode must be one of {MODES}, got {self.mode!r}")
        for m in (self.outcomes_a, self.outcomes_c):
            if not 2 <= m <= 4:
                raise UsageError("qubit rank-1 POVMs need between 2 and 4 outcomes")
        if self.mode == "projective" and (self.outcomes_a, self.outcomes_c) != (2, 2):
            raise UsageError("projective qubit measurements have exactly 2 outcomes")

    def as_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class OptimizedMi:
    value: float
    povm_a: Povm
    povm_c: Povm
    params: tuple[float, ...]
    evaluations: int
    mode: str

    def summary(self) -> dict:
        return {
            "value": self.value,
            "mode": self.mode,
            "params": list(self.params),
            "evaluations": self.evaluations,
            "povm_a": self.povm_a.describe(),
            "povm_c": self.povm_c.describe(),
        }


def bloch_representation(rho: DensityOperator) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Local Bloch vectors and correlation matrix of a two-qubit state."""
    if rho.layout.dims != (2, 2):
        raise UsageError("measurement optimisation supports two-qubit states only")
    m = rho.matrix
    ra = np.array([np.trace(np.kron(s, I2) @ m).real for s in PAULIS])
    rc = np.array([np.trace(np.kron(I2, s) @ m).real for s in PAULIS])
    t = np.array([[np.trace(np.kron(s, u) @ m).real for u in PAULIS] for s in PAULIS])
    return ra, rc, t


def _hemisphere_grid(steps: int) -> tuple[np.ndarray, np.ndarray]:
    th = np.linspace(0.0, math.pi / 2, steps)
    ph = np.arange(steps) * (2 * math.pi / steps)
    tt, pp = np.meshgrid(th, ph, indexing="ij")
    tt, pp = tt.ravel(), pp.ravel()
    dirs = np.stack([np.sin(tt) * np.cos(pp), np.sin(tt) * np.sin(pp), np.cos(tt)], axis=1)
    return np.stack([tt, pp], axis=1), dirs


def _binary_h(x: float) -> float:
    return -(x * math.log2(x) if x > 0 else 0.0) - ((1 - x) * math.log2(1 - x) if x < 1 else 0.0)


def _binary_h_vec(x: np.ndarray) -> np.ndarray:
    x = np.clip(x, 0.0, 1.0)
    y = 1.0 - x
    return -(x * np.log2(np.maximum(x, 1e-300)) + y * np.log2(np.maximum(y, 1e-300)))


def _make_projective_objective(ra, rc, t):
    ra = [float(v) for v in ra]
    rc = [float(v) for v in rc]
    t = [[float(v) for v in row] for row in t]

    def neg_mi(x) -> float:
        a = _unit(x[0], x[1])
        c = _unit(x[2], x[3])
        u = a[0] * ra[0] + a[1] * ra[1] + a[2] * ra[2]
        v = c[0] * rc[0] + c[1] * rc[1] + c[2] * rc[2]
        tc = [t[i][0] * c[0] + t[i][1] * c[1] + t[i][2] * c[2] for i in range(3)]
        w = a[0] * tc[0] + a[1] * tc[1] + a[2] * tc[2]
        hj = 0.0
        for s in (1, -1):
            for r in (1, -1):
                q = (1 + s * u + r * v + s * r * w) / 4
                if q > 0:
                    hj -= q * math.log2(q)
        pa = min(max((1 + u) / 2, 0.0), 1.0)
        pc = min(max((1 + v) / 2, 0.0), 1.0)
        return -(_binary_h(pa) + _binary_h(pc) - hj)

    return neg_mi


def _canonical_angles(theta: float, phi: float) -> tuple[float, float]:
    """Representative of the unordered projector pair {n, -n} with n_z >= 0."""
    n = np.array(_unit(theta, phi))
    if n[2] < 0 or (n[2] == 0 and (n[1] < 0 or (n[1] == 0 and n[0] < 0))):
        n = -n
    d = BlochDirection.from_vector(n)
    return d.theta, d.phi


def _select(rho: DensityOperator, candidates, to_povms):
    """Best candidate by its exact trace-formula value.

    Ties go to the lexicographically smallest parameters, so the result does
    not depend on evaluation order and a superset of candidates never scores lower.
    """
    best = None
    for x in candidates:
        povms = to_povms(x)
        if povms is None:
            continue
        v = classical_mi_for(rho, *povms)
        key = (-v, tuple(x))
        if best is None or key < best[0]:
            best = (key, povms)
    (neg_v, params), (ea, fc) = best
    return -neg_v, params, ea, fc


def _refine(fun, x0, cfg: OptimizerConfig) -> tuple[float, tuple[float, ...], int]:
    res = minimize(
        fun,
        np.asarray(x0, dtype=float),
        method="Nelder-Mead",
        options={"maxiter": cfg.refine_iters * len(x0), "xatol": cfg.tol, "fatol": cfg.tol},
    )
    return -float(res.fun), tuple(float(v) for v in res.x), int(res.nfev)


def _optimize_projective(rho: DensityOperator, cfg: OptimizerConfig):
    ra, rc, t = bloch_representation(rho)
    angles, dirs = _hemisphere_grid(cfg.grid_steps)
    u = dirs @ ra
    v = dirs @ rc
    n = len(dirs)

    h_a = _binary_h_vec((1 + u) / 2)
    h_c = _binary_h_vec((1 + v) / 2)

    best_vals = np.empty(n)
    best_cols = np.empty(n, dtype=int)
    chunk = max(1, 2**19 // n)
    for lo in range(0, n, chunk):
        hi = min(n, lo + chunk)
        w = dirs[lo:hi] @ t @ dirs.T
        uu = u[lo:hi, None]
        # the four outcome probabilities (1 + s u + r v + s r w) / 4, s, r = +-1
        mi = h_a[lo:hi, None] + h_c[None, :]
        for q in ((1 + uu + v + w), (1 - uu - v + w), (1 + uu - v - w), (1 - uu + v - w)):
            q *= 0.25
            np.maximum(q, 0.0, out=q)
            mi += q * np.log2(np.maximum(q, 1e-300))
        best_cols[lo:hi] = np.argmax(mi, axis=1)
        best_vals[lo:hi] = mi[np.arange(hi - lo), best_cols[lo:hi]]
    evaluations = n * n

    # best A-direction rows, each paired with its best C-direction; stable sort keeps ties deterministic
    order = np.argsort(-best_vals, kind="stable")[:_GRID_SEEDS]
    grid_cands = [
        (float(best_vals[i]), tuple(float(x) for x in (*angles[i], *angles[best_cols[i]]))) for i in order
    ]

    fun = _make_projective_objective(ra, rc, t)
    cands = list(grid_cands)
    for _, x0 in grid_cands:
        val, x, nfev = _refine(fun, x0, cfg)
        cands.append((val, x))
        evaluations += nfev
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.restarts):
        x0 = rng.uniform(0.0, 2 * math.pi, size=4)
        val, x, nfev = _refine(fun, x0, cfg)
        cands.append((val, x))
        evaluations += nfev

    canon = [(*_canonical_angles(x[0], x[1]), *_canonical_angles(x[2], x[3])) for _, x in cands]

    def to_povms(x):
        return projective_qubit(BlochDirection(x[0], x[1])), projective_qubit(BlochDirection(x[2], x[3]))

    value, params, ea, fc = _select(rho, canon, to_povms)
    return value, params, ea, fc, evaluations


def rank1_effects(params: np.ndarray, outcomes: int) -> np.ndarray | None:
    """Rank-1 qubit POVM from ``outcomes`` unnormalised kets.

    With G = sum_k |v_k><v_k|, the effects G^{-1/2}|v_k><v_k|G^{-1/2} are
    rank-1 and sum to the identity exactly. Returns None when G is singular.
    """
    v = np.asarray(params, dtype=float).reshape(outcomes, 4)
    kets = v[:, 0:2] + 1j * v[:, 2:4]
    g = kets.T @ kets.conj()
    w, u = np.linalg.eigh(g)
    if w[0] < 1e-9 * max(w[-1], 1e-300):
        return None
    g_inv_sqrt = (u / np.sqrt(w)) @ u.conj().T
    k = kets @ g_inv_sqrt.T
    return np.einsum("ka,kb->kab", k, k.conj())


def _split_projective(d: BlochDirection, outcomes: int) -> np.ndarray:
    """Parameters of a projective measurement split into ``outcomes`` equal-share effects.

    Splitting an effect into identical fractions leaves the mutual information unchanged.
    """
    plus = d.ket()
    minus = np.array([math.sin(d.theta / 2), -complex(math.cos(d.phi), math.sin(d.phi)) * math.cos(d.theta / 2)])
    n_plus = (outcomes + 1) // 2
    n_minus = outcomes // 2
    rows = []
    for k in range(outcomes):
        ket_, cnt = (plus, n_plus) if k % 2 == 0 else (minus, n_minus)
        z = ket_ / math.sqrt(cnt)
        rows.append([z[0].real, z[1].real, z[0].imag, z[1].imag])
    return np.array(rows).ravel()


def _optimize_rank1(rho: DensityOperator, cfg: OptimizerConfig):
    ma, mc = cfg.outcomes_a, cfg.outcomes_c
    r = rho.matrix.reshape(2, 2, 2, 2)
    na = 4 * ma

    def neg_mi(x) -> float:
        ea = rank1_effects(x[:na], ma)
        fc = rank1_effects(x[na:], mc)
        if ea is None or fc is None:
            return 1.0
        p = np.einsum("iab,jcd,bdac->ij", ea, fc, r).real
        return -float(_mi_batch(p))

    _, proj_params, _, _, evaluations = _optimize_projective(rho, cfg)
    x_proj = np.concatenate(
        [
            _split_projective(BlochDirection(proj_params[0], proj_params[1]), ma),
            _split_projective(BlochDirection(proj_params[2], proj_params[3]), mc),
        ]
    )
    # the embedded projective optimum is itself a candidate, so this mode never does worse
    start_val = -neg_mi(x_proj)
    cands = [(start_val, tuple(float(v) for v in x_proj))]
    evaluations += 1
    val, x, nfev = _refine(neg_mi, x_proj, cfg)
    cands.append((val, x))
    evaluations += nfev
    rng = np.random.default_rng(cfg.seed)
    for _ in range(cfg.restarts):
        x0 = rng.standard_normal(4 * (ma + mc))
        val, x, nfev = _refine(neg_mi, x0, cfg)
        cands.append((val, x))
        evaluations += nfev

    def to_povms(x):
        x = np.asarray(x)
        ea, fc = rank1_effects(x[:na], ma), rank1_effects(x[na:], mc)
        if ea is None or fc is None:
            return None
        return Povm(tuple(ea)), Povm(tuple(fc))

    value, params, ea, fc = _select(rho, [x for _, x in cands], to_povms)
    return value, params, ea, fc, evaluations


def optimize_classical_mi(rho: DensityOperator, cfg: OptimizerConfig | None = None) -> OptimizedMi:
    """Maximise the classical mutual information over local measurement pairs.

    Projective mode scans a coarse grid of Bloch-direction pairs, then polishes
    the best grid points and ``cfg.restarts`` random starts with Nelder-Mead.
    Rank-1 POVM mode starts from the projective optimum (split into the
    requested number of outcomes) plus random starts. Deterministic per seed.
    """
    cfg = cfg or OptimizerConfig()
    if rho.layout.dims != (2, 2):
        raise UsageError("measurement optimisation supports two-qubit states only")
    if cfg.mode == "projective":
        value, params, ea, fc, n = _optimize_projective(rho, cfg)
    else:
        value, params, ea, fc, n = _optimize_rank1(rho, cfg)
    return OptimizedMi(value, ea, fc, tuple(params), n, cfg.mode)


def holevo_gap_check(rho: DensityOperator, optimized: OptimizedMi) -> float:
    """I_q(rho) minus the optimised classical mutual information (never below -1e-9)."""
    a, c = rho.layout.labels
    gap = quantum_mutual_information(rho, a, c) - optimized.value
    if gap < -1e-9:
        raise NumericalContractError(f"classical mutual information exceeds I_q by {-gap!r}")
    return gap
