"""
One-dimensional Helmholtz problem on the half line with an HSIE boundary.

    -u'' - kappa^2 n(r) u = 0  on r > 0,   u'(0) = g,   u outgoing,

with ``n = 1`` for ``r >= a``.  The interval ``[0, a]`` carries GLL Lagrange
elements; the half line ``r > a`` is a single infinite element sharing the
trace value ``u0 = u(a)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .basis import gauss_legendre, lagrange_1d
from .errors import ResidualTooLarge, SingularSystem
from .hardy import HardyParams, hsm_mass_1d, hsm_stiffness_1d, make_T
from .solvers import backward_error, lu_solve, shift_invert_eigs


@dataclass(frozen=True)
class Problem1D:
    """Parameters of the half-line problem.

    ``n_breaks`` are the interior points of ``(0, a)`` where the piecewise
    constant coefficient ``n`` jumps; ``n_values`` has one entry per piece.
    ``left_bc`` is ``"neumann"`` (``u'(0) = g``) or ``"dirichlet"`` (``u(0) = 0``).
    """

    a: float = 1.0
    kappa: complex = 1.0
    g: complex = 1.0
    fe_order: int = 4
    n_cells: int = 20
    hardy: HardyParams = field(default_factory=lambda: HardyParams(1.0, 0))
    n_breaks: tuple = ()
    n_values: tuple = (1.0,)
    left_bc: str = "neumann"

    def __post_init__(self):
        if self.a <= 0:
            raise ValueError("a must be positive")
        if len(self.n_values) != len(self.n_breaks) + 1:
            raise ValueError("n_values needs one entry per piece")
        if any(v <= 0 for v in self.n_values):
            raise ValueError("n must be positive")
        br = np.asarray(self.n_breaks, dtype=float)
        if br.size and (np.any(np.diff(br) <= 0) or br[0] <= 0 or br[-1] >= self.a):
            raise ValueError("n_breaks must increase strictly inside (0, a)")
        if self.fe_order < 1 or self.n_cells < 1:
            raise ValueError("fe_order and n_cells must be >= 1")
        if self.left_bc not in ("neumann", "dirichlet"):
            raise ValueError("left_bc must be 'neumann' or 'dirichlet'")

    def grid(self) -> np.ndarray:
        """Cell boundaries, aligned with the jumps of ``n``."""
        edges = np.concatenate([[0.0], np.asarray(self.n_breaks, float), [self.a]])
        lengths = np.diff(edges)
        counts = np.maximum(1, np.round(self.n_cells * lengths / self.a).astype(int))
        pts = [np.linspace(edges[k], edges[k + 1], counts[k] + 1)[:-1] for k in range(len(lengths))]
        return np.concatenate(pts + [[self.a]])

    def n_at(self, r):
        return np.asarray(self.n_values, float)[np.searchsorted(self.n_breaks, r, side="right")]


@dataclass
class Solution1D:
    nodes: np.ndarray
    interior_coeffs: np.ndarray
    u0: complex
    hardy_coeffs: np.ndarray
    hardy: HardyParams

    def exterior_vector(self) -> np.ndarray:
        """``(u0, U_0, ..., U_N)``."""
        return np.concatenate([[self.u0], self.hardy_coeffs])

    def transformed_coefficients(self) -> np.ndarray:
        """Monomial coefficients of ``(1/(i k0)) T_-(u0, U)``, degree ``0..N+1``."""
        Tm = make_T(self.hardy.n_modes, -1)
        return (Tm @ self.exterior_vector()) / (1j * self.hardy.kappa0)


@dataclass
class System1D:
    S: sp.csr_matrix
    M: sp.csr_matrix
    rhs: np.ndarray
    nodes: np.ndarray
    n_interior: int
    trace_index: int
    free: np.ndarray


def assemble_1d(prob: Problem1D) -> System1D:
    """Assemble ``(S - kappa^2 M) x = rhs``; ``S`` and ``M`` never depend on ``kappa``.

    Unknowns: interior nodes left to right (the last one is ``u0``), then the
    Hardy coefficients ``U_0..U_N``.
    """
    p = prob.fe_order
    grid = prob.grid()
    ncell = len(grid) - 1
    basis = lagrange_1d(p)
    xq, wq = gauss_legendre(p + 1)
    phi, dphi = basis(xq)
    Mref = (phi * wq[:, None]).T @ phi
    Kref = (dphi * wq[:, None]).T @ dphi
    h = np.diff(grid)
    nval = prob.n_at(0.5 * (grid[:-1] + grid[1:]))

    n_int = ncell * p + 1
    cell_dofs = np.arange(ncell)[:, None] * p + np.arange(p + 1)[None, :]
    nodes = (grid[:-1, None] + h[:, None] * basis.nodes[None, :]).ravel()
    nodes = np.concatenate([nodes.reshape(ncell, p + 1)[:, :-1].ravel(), [prob.a]])

    rows = np.repeat(cell_dofs, p + 1, axis=1).ravel()
    cols = np.tile(cell_dofs, (1, p + 1)).ravel()
    kvals = (Kref[None] / h[:, None, None]).ravel()
    mvals = (Mref[None] * (h * nval)[:, None, None]).ravel()

    hp = prob.hardy
    ext = np.concatenate([[n_int - 1], n_int + np.arange(hp.n_modes + 1)])
    Sx = hsm_stiffness_1d(hp)
    Mx = hsm_mass_1d(hp)
    er = np.repeat(ext, len(ext))
    ec = np.tile(ext, len(ext))
    ntot = n_int + hp.n_modes + 1
    S = sp.coo_matrix((np.concatenate([kvals, Sx.ravel()]), (np.concatenate([rows, er]), np.concatenate([cols, ec]))),
                      shape=(ntot, ntot)).tocsr()
    M = sp.coo_matrix((np.concatenate([mvals, Mx.ravel()]), (np.concatenate([rows, er]), np.concatenate([cols, ec]))),
                      shape=(ntot, ntot)).tocsr()
    S.sum_duplicates()
    M.sum_duplicates()
    rhs = np.zeros(ntot, dtype=complex)
    free = np.arange(ntot)
    if prob.left_bc == "neumann":
        rhs[0] = -prob.g
    else:
        free = free[1:]
    return System1D(S=S, M=M, rhs=rhs, nodes=nodes, n_interior=n_int, trace_index=n_int - 1, free=free)


def _split(sysm: System1D, x_free, hp) -> Solution1D:
    x = np.zeros(sysm.S.shape[0], dtype=complex)
    x[sysm.free] = x_free
    return Solution1D(nodes=sysm.nodes, interior_coeffs=x[:sysm.n_interior],
                      u0=complex(x[sysm.trace_index]), hardy_coeffs=x[sysm.n_interior:], hardy=hp)


def solve_scattering_1d(prob: Problem1D) -> Solution1D:
    """Direct solve; raises ``SingularSystem`` when ``kappa^2`` hits a discrete eigenvalue."""
    sysm = assemble_1d(prob)
    f = sysm.free
    A = (sysm.S - prob.kappa**2 * sysm.M)[f][:, f]
    b = sysm.rhs[f]
    try:
        x = lu_solve(A, b, tol=1e-8)
    except ResidualTooLarge as exc:
        raise SingularSystem(f"kappa^2 = {prob.kappa**2} is (close to) a discrete eigenvalue") from exc
    if backward_error(A, x, b) > 1e-8:
        raise SingularSystem("relative residual above 1e-8")
    return _split(sysm, x, prob.hardy)


def solve_resonance_1d(prob: Problem1D, shift: complex, n_want: int = 1, tol: float = 1e-10):
    """Eigenpairs ``(kappa^2, mode)`` of ``S x = kappa^2 M x`` nearest ``shift``.

    ``prob.kappa`` and ``prob.g`` are ignored; the left boundary condition is
    the homogeneous version of ``prob.left_bc``.
    """
    sysm = assemble_1d(prob)
    f = sysm.free
    res = shift_invert_eigs(sysm.S[f][:, f], sysm.M[f][:, f], shift, n_want=n_want, tol=tol)
    return [(complex(lam), _split(sysm, res.eigenvectors[:, k], prob.hardy))
            for k, lam in enumerate(res.eigenvalues)]


def exact_u0(prob: Problem1D) -> complex:
    """``u(a)`` for the homogeneous medium ``n = 1`` and Neumann data ``g``."""
    if prob.n_breaks or any(v != 1.0 for v in prob.n_values):
        raise ValueError("closed form only for n = 1")
    k = complex(prob.kappa)
    return prob.g * np.exp(1j * k * prob.a) / (1j * k)
