"""First-order Hamiltonians, homological equation and the reducibility iteration.

The normal form is ``omega.Y + sum_j D_j |a_j|**2 + Q`` with ``Q`` a
:class:`~kamlattice.quadham.TruncatedQuadHam`. One step solves

    {omega.Y + D, chi} = Pi_{<=N}([Q] - Q)

and conjugates by the time-one flow of ``chi`` as a Lie series.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field, asdict
from typing import Sequence

import numpy as np

from .errors import KamLatticeError, NonGenericError, SmallDivisorError, ValidationError
from .lattice import CIRCLE_PLUS, Site, _as_support, check_genericity, circle_loci, classify_site
from .quadham import (
    TruncatedQuadHam,
    TruncationGrid,
    bracket_with_diagonal,
    divisors,
    majorant_norm,
    poisson_bracket,
)
from .spectra import as_lambda, build_M, build_N

__all__ = [
    "DiagHam",
    "HomologicalSolution",
    "KamStepResult",
    "KamConfig",
    "KamRecord",
    "KamTrace",
    "LieSeriesError",
    "build_H1_Z1",
    "solve_homological",
    "homological_residual",
    "kam_step",
    "kam_iterate",
    "schedule",
]

C_STAR = 3.0 / math.pi**2


class LieSeriesError(KamLatticeError):
    """The Lie series terms stopped decreasing."""


@dataclass(frozen=True)
class DiagHam:
    """Diagonal part: normal frequencies on the grid sites and tangential frequencies."""

    freq: np.ndarray
    omega: np.ndarray

    @classmethod
    def squared_norms(cls, grid: TruncationGrid, omega) -> "DiagHam":
        """``D_j = |j|**2``, the unperturbed normal frequencies."""
        return cls((grid.m**2 + grid.n**2).astype(float), np.asarray(omega, dtype=float))

    def shifted(self, delta: np.ndarray) -> "DiagHam":
        return DiagHam(self.freq + np.asarray(delta, dtype=float), self.omega)


# first-order Hamiltonians -----------------------------------------------------


def build_H1_Z1(s0, lam, eps: float, grid: TruncationGrid) -> dict:
    """First-order normal-form Hamiltonian, its resonant part and the block data.

    ``H1`` contains, for ``i != j`` and ``n != 0``:

    * ``A[(m1,n),(m2,n)]`` at ``ell = e_i - e_j`` with value
      ``2 eps sqrt(lam_i lam_j) (m_i**2 - m_j**2)**2 / (m1**2 - m2**2)**2`` when
      ``m2 - m1 = m_i - m_j`` and ``|m1| != |m2|``, and ``2 eps sqrt(lam_i lam_j)``
      when ``m2 = -m1``;

    and, for all ``i, j`` and ``n > 0``, the ``a a`` coefficient at
    ``ell = -e_i - e_j`` joining ``(m1, n)`` and ``(m2, -n)`` with
    ``m1 + m2 = m_i + m_j``:
    ``eps sqrt(lam_i lam_j) (m_i**2 + m_j**2) mult / (m1**2 + m2**2 + 2 n**2)``
    with ``mult`` the number of ordered index pairs.

    ``Z1`` keeps the entries whose divisor vanishes at ``eps = 0``.
    ``Zhat_blocks`` lists the type I matrices ``n**2 I + eps M(lam)`` on the
    line sites and, per upper-arc circle site, ``K Sigma + eps N(lam_i, lam_k)``.
    """
    s0 = _as_support(s0)
    lam = as_lambda(lam)
    if lam.size != s0.d:
        raise ValidationError("lambda dimension does not match the support")
    if not check_genericity(s0, 0).generic:
        raise NonGenericError(f"support {s0.sites} is not generic")
    if grid.s0 != s0:
        raise ValidationError("grid was built for a different support")
    ms = s0.sites
    d = s0.d
    eye = np.eye(d, dtype=int)
    H1 = TruncatedQuadHam.zeros(grid)
    idx = grid.index
    for i, j in itertools.permutations(range(d), 2):
        ell = tuple(int(v) for v in eye[i] - eye[j])
        if ell not in grid.ell_index:
            continue
        li = grid.ell_index[ell]
        amp = 2.0 * eps * math.sqrt(lam[i] * lam[j])
        shift = ms[i] - ms[j]
        for (m1, n), a in idx.items():
            if n == 0:
                continue
            m2 = m1 + shift
            b = idx.get(Site(m2, n))
            if b is None:
                continue
            if abs(m1) != abs(m2):
                H1.A[li, a, b] += amp * (ms[i] ** 2 - ms[j] ** 2) ** 2 / (m1 * m1 - m2 * m2) ** 2
            elif m2 == -m1:
                H1.A[li, a, b] += amp
    for i, j in itertools.product(range(d), repeat=2):
        ell = tuple(int(v) for v in -eye[i] - eye[j])
        if ell not in grid.ell_index:
            continue
        li = grid.ell_index[ell]
        amp = eps * math.sqrt(lam[i] * lam[j]) * (ms[i] ** 2 + ms[j] ** 2)
        total = ms[i] + ms[j]
        for (m1, n), a in idx.items():
            if n <= 0:
                continue
            b = idx.get(Site(total - m1, -n))
            if b is None:
                continue
            m2 = total - m1
            val = amp / (m1 * m1 + m2 * m2 + 2 * n * n)
            H1.B[li, a, b] += val
            H1.B[li, b, a] += val
    D0 = (grid.m**2 + grid.n**2).astype(float)
    omega0 = np.array([m * m for m in ms], dtype=float)
    divA, divB = divisors(grid, omega0, D0)
    Z1 = TruncatedQuadHam(grid, np.where(np.abs(divA) < 0.5, H1.A, 0), np.where(np.abs(divB) < 0.5, H1.B, 0))

    blocks = []
    for n in range(1, grid.Ny + 1):
        for nn in (n, -n):
            blocks.append(
                {
                    "type": "I",
                    "n": nn,
                    "sites": [[m, nn] for m in ms],
                    "matrix": (nn * nn * np.eye(d) + eps * build_M(lam)).tolist(),
                }
            )
    for (i, k), pts in circle_loci(s0).items():
        for p in pts:
            if p.n <= 0:
                continue
            K = (p.m - ms[i]) * (ms[i] + ms[k])
            mat = K * np.diag([1.0, -1.0]) + eps * build_N(lam[i], lam[k])
            blocks.append(
                {
                    "type": "II",
                    "pair": [i, k],
                    "site": [p.m, p.n],
                    "partner": [ms[i] + ms[k] - p.m, -p.n],
                    "K": K,
                    "matrix": mat.tolist(),
                }
            )
    return {"H1": H1, "Z1": Z1, "Zhat_blocks": blocks}


# homological equation -------------------------------------------------------


@dataclass
class HomologicalSolution:
    chi: TruncatedQuadHam
    avg: np.ndarray
    min_divisor: float


def solve_homological(
    D: DiagHam,
    Q: TruncatedQuadHam,
    N: float,
    gamma: float,
    tau: float,
    eps: float,
    guard: bool = True,
) -> HomologicalSolution:
    """Solve ``{omega.Y + D, chi} = Pi_{<=N}([Q] - Q)`` entrywise.

    Every entry allowed by the selection rules with ``|ell|_1 <= N``, except
    the angle-averaged diagonal, must have divisor at least
    ``eps gamma / 2 * N**-tau``.

    Raises
    ------
    SmallDivisorError
        On the first entry violating the guard.
    """
    g = Q.grid
    divA, divB = divisors(g, D.omega, D.freq)
    okA, okB = g.allowed
    low = (g.ell_norm <= N)[:, None, None]
    zero = g.ell_index[(0,) * g.d]
    diag = np.zeros(g.shape, dtype=bool)
    diag[zero] = np.eye(g.size, dtype=bool)
    selA = okA & low & ~diag
    selB = okB & low
    thr = eps * gamma / 2.0 * float(max(N, 1.0)) ** (-tau)
    mins = []
    for which, sel, div in (("-", selA, divA), ("+", selB, divB)):
        if not sel.any():
            continue
        vals = np.abs(div[sel])
        mins.append(float(vals.min()))
        if guard and vals.min() < thr:
            li, j, k = (int(x) for x in np.argwhere(sel & (np.abs(div) < thr))[0])
            sj, sk = g.sites[j], g.sites[k]
            key = (which, tuple(int(v) for v in g.ells[li]), sj.m, sk.m, sj.n)
            raise SmallDivisorError(key, float(div[li, j, k]), thr)
    with np.errstate(divide="ignore", invalid="ignore"):
        chiA = np.where(selA, Q.A / (1j * np.where(selA, divA, 1.0)), 0)
        chiB = np.where(selB, Q.B / (1j * np.where(selB, divB, 1.0)), 0)
    chi = TruncatedQuadHam(g, chiA, chiB)
    return HomologicalSolution(chi, Q.average(), min(mins) if mins else math.inf)


def homological_residual(D: DiagHam, Q: TruncatedQuadHam, chi: TruncatedQuadHam, N: float) -> float:
    """Max-entry size of ``{omega.Y + D, chi} - Pi_{<=N}([Q] - Q)``."""
    lhs = bracket_with_diagonal(D.omega, D.freq, chi)
    rhs = TruncatedQuadHam.diagonal(Q.grid, Q.average()) - Q.project(N)
    return (lhs - rhs).max_abs()


# one step and the iteration ---------------------------------------------------


@dataclass
class KamStepResult:
    D_new: DiagHam
    Q_new: TruncatedQuadHam
    chi: TruncatedQuadHam
    avg: np.ndarray
    drift: float
    lie_terms: int
    truncation_loss: float


def kam_step(
    D: DiagHam,
    Q: TruncatedQuadHam,
    N: float,
    gamma: float,
    tau: float,
    eps: float,
    s: float = 0.0,
    tol_lie: float = 1e-14,
    max_terms: int = 60,
) -> KamStepResult:
    """One reducibility step.

    ``Q_new = Pi_{>N} Q + sum_{k>=1} ad^k Q / k! + sum_{k>=1} ad^k([Q] - Pi_{<=N} Q) / (k+1)!``
    with ``ad F = {F, chi}``; summation stops once the combined new term has
    majorant norm below ``tol_lie`` times the running total.
    """
    sol = solve_homological(D, Q, N, gamma, tau, eps)
    chi = sol.chi
    g = Q.grid
    Q_new = Q.project(N, above=True)
    t1 = Q.copy()
    t2 = TruncatedQuadHam.diagonal(g, sol.avg) - Q.project(N)
    t1.truncation_loss = t2.truncation_loss = 0.0
    total = Q_new.copy()
    prev = math.inf
    growth = 0
    k = 0
    if not chi.is_zero():
        for k in range(1, max_terms + 1):
            t1 = poisson_bracket(t1, chi, loss_s=s) * (1.0 / k)
            t2 = poisson_bracket(t2, chi, loss_s=s) * (1.0 / (k + 1))
            term = t1 + t2
            total = total + term
            size = majorant_norm(term, s)
            tot = majorant_norm(total, s)
            if size <= tol_lie * tot or term.is_zero():
                break
            growth = growth + 1 if size > prev else 0
            if growth >= 3:
                raise LieSeriesError(f"Lie series terms grow at order {k}")
            prev = size
    D_new = D.shifted(sol.avg)
    return KamStepResult(
        D_new, total, chi, sol.avg, float(np.max(np.abs(sol.avg), initial=0.0)), k, total.truncation_loss
    )


@dataclass(frozen=True)
class KamConfig:
    s: float = 1.0
    eta0: float = 1e-3
    gamma: float = 0.1
    tau: float = 4.0
    eps: float = 1e-3
    nu_max: int = 4
    tol_lie: float = 1e-14

    def __post_init__(self):
        if not (self.s > 0 and 0 < self.eta0 < 1 and self.gamma > 0 and self.eps > 0 and self.nu_max >= 0):
            raise ValidationError(f"invalid KAM configuration {self}")


def schedule(cfg: KamConfig, nu: int) -> tuple[float, float, float]:
    """``(s_nu, N_nu, eta_nu)`` of the iteration.

    ``s_nu = s_{nu-1} - c s / nu**2`` with ``c = 3 / pi**2``,
    ``eta_nu = eta0**((3/2)**nu)`` and
    ``N_nu = log(1/eta_nu) / (s_nu - s_{nu+1})``.
    """
    s_nu = cfg.s - C_STAR * cfg.s * sum(1.0 / k**2 for k in range(1, nu + 1))
    eta = cfg.eta0 ** (1.5**nu)
    N = math.log(1.0 / eta) / (C_STAR * cfg.s / (nu + 1) ** 2)
    return s_nu, N, eta


@dataclass
class KamRecord:
    nu: int
    s_nu: float
    N_nu: float
    eta_target: float
    q_norm: float
    q_hat: float
    meets_target: bool
    freq_drift: float
    excluded: bool
    truncation_loss: float
    lie_terms: int
    small_divisor: dict | None = None

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class KamTrace:
    config: dict
    records: list = field(default_factory=list)
    D_final: np.ndarray | None = None

    @property
    def first_failure(self) -> int | None:
        for r in self.records:
            if not r.meets_target:
                return r.nu
        return None

    @property
    def total_drift(self) -> float:
        return float(sum(r.freq_drift for r in self.records))

    def to_dict(self) -> dict:
        return {
            "config": self.config,
            "records": [r.to_dict() for r in self.records],
            "first_failure": self.first_failure,
            "total_drift": self.total_drift,
        }


def kam_iterate(D0: DiagHam, Q0: TruncatedQuadHam, cfg: KamConfig) -> KamTrace:
    """Run ``cfg.nu_max`` steps with the parameter schedule of :func:`schedule`.

    Norms are majorant norms at ``s_nu``; ``q_hat = q / (gamma**2 eps)`` is
    compared with ``eta_nu``. A small divisor ends the run with
    ``excluded = True`` on the last record.
    """
    scale = cfg.gamma**2 * cfg.eps
    trace = KamTrace(asdict(cfg))
    D, Q = D0, Q0
    for nu in range(cfg.nu_max + 1):
        s_nu, N_nu, eta = schedule(cfg, nu)
        q = majorant_norm(Q, s_nu)
        rec = KamRecord(nu, s_nu, N_nu, eta, q, q / scale, q / scale <= eta * (1 + 1e-9), 0.0, False,
                        Q.truncation_loss, 0)
        trace.records.append(rec)
        if nu == cfg.nu_max:
            break
        s_next = schedule(cfg, nu + 1)[0]
        try:
            res = kam_step(D, Q, N_nu, cfg.gamma, cfg.tau, cfg.eps, s=s_next, tol_lie=cfg.tol_lie)
        except SmallDivisorError as exc:
            rec.excluded = True
            rec.small_divisor = {"key": list(map(str, exc.key)), "value": exc.value, "threshold": exc.threshold}
            break
        rec.freq_drift = res.drift
        rec.lie_terms = res.lie_terms
        D, Q = res.D_new, res.Q_new
        Q.truncation_loss = res.truncation_loss
    trace.D_final = D.freq
    return trace
