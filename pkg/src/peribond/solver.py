"""Constrained minimization of the nonlocal energies and experiment drivers.

The minimization enforces a volumetric Dirichlet collar by hard projection:
nodes within the collar carry the boundary datum at every iterate.  Descent
is projected gradient with Armijo backtracking, optionally accelerated by a
two-loop quasi-Newton recursion.  Two drivers realize the limit experiments:
small-displacement convergence of the rescaled energies, and localization of
constrained minimizers under a concentrating kernel sequence.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .constructions import laminate_profile
from .density import density_lower_batch, density_tilde_batch
from .energy import (PairSet, StrainDomainError, build_pairs, energy_E0,
                     energy_E_eps, energy_Fn, gradient_Fn)
from .grids import (Grid, SubdomainMask, VectorField, box_grid, full_mask,
                    sphere_quadrature)
from .kernels import Kernel, KernelSequence, derived_interaction_kernel
from .materials import MicroPotential, Potential


@dataclass(frozen=True)
class SolverSettings:
    max_iters: int = 50_000
    grad_tol: float | None = None  # default by dimension: 1e-8 (1D), 1e-6 else
    armijo_shrink: float = 0.5
    armijo_slope: float = 1e-4
    use_quasi_newton: bool = True
    memory: int = 10

    def tol_for(self, dim: int) -> float:
        if self.grad_tol is not None:
            return self.grad_tol
        return 1e-8 if dim == 1 else 1e-6


@dataclass(frozen=True)
class DirichletProblem:
    """Minimize the nonlocal energy over fields pinned to g on the collar."""

    mask: SubdomainMask
    g: VectorField
    kernel: Kernel
    phi: Potential
    m: float = 1.0
    settings: SolverSettings = field(default_factory=SolverSettings)

    def __post_init__(self):
        if self.mask.collar_width <= 0:
            raise ValueError("Dirichlet problems need a positive collar width")
        x = self.mask.grid.nodes()[self.mask.active]
        diam = float(np.linalg.norm(x.max(axis=0) - x.min(axis=0)))
        if not self.mask.collar_width < 0.5 * diam:
            raise ValueError("collar width must be below half the domain diameter")

    @property
    def free(self) -> np.ndarray:
        return self.mask.active & ~self.mask.collar()


@dataclass
class MinimizeResult:
    v: VectorField
    energy_trace: np.ndarray
    grad_norm: float
    iterations: int
    converged: bool


class _TwoLoop:
    """Limited-memory quasi-Newton direction from gradient differences."""

    def __init__(self, memory: int):
        self.memory = memory
        self.s: list[np.ndarray] = []
        self.y: list[np.ndarray] = []

    def push(self, s: np.ndarray, y: np.ndarray) -> None:
        if float(s @ y) > 1e-14 * float(s @ s) ** 0.5 * float(y @ y) ** 0.5:
            self.s.append(s)
            self.y.append(y)
            if len(self.s) > self.memory:
                self.s.pop(0)
                self.y.pop(0)

    def direction(self, grad: np.ndarray) -> np.ndarray:
        if not self.s:
            return -grad
        q = grad.copy()
        alphas = []
        rhos = [1.0 / float(yy @ ss) for ss, yy in zip(self.s, self.y)]
        for ss, yy, rr in zip(reversed(self.s), reversed(self.y), reversed(rhos)):
            a = rr * float(ss @ q)
            alphas.append(a)
            q -= a * yy
        gamma = float(self.s[-1] @ self.y[-1]) / float(self.y[-1] @ self.y[-1])
        q *= gamma
        for ss, yy, rr, a in zip(self.s, self.y, rhos, reversed(alphas)):
            b = rr * float(yy @ q)
            q += (a - b) * ss
        return -q


def minimize_Fng(prob: DirichletProblem, v0: VectorField | None = None,
                 pairs: PairSet | None = None) -> MinimizeResult:
    """Projected descent on the nonlocal energy with an exact collar constraint.

    Iterates are feasible at every step (collar nodes are bit-identical to
    the datum); the energy trace is strictly decreasing until the projected
    gradient falls below tolerance.
    """
    if not prob.phi.smooth_at_zero:
        raise ValueError("minimization requires a profile differentiable at 0")
    grid = prob.mask.grid
    st = prob.settings
    tol = st.tol_for(grid.dim)
    if pairs is None:
        pairs = build_pairs(grid, prob.mask, prob.kernel.support_radius)
    free = prob.free

    vals = (v0.values if v0 is not None else prob.g.values).copy()
    vals[~free] = prob.g.values[~free]

    def energy(a: np.ndarray) -> float:
        return energy_Fn(VectorField(grid, a), prob.mask, prob.kernel,
                         prob.phi, prob.m, pairs=pairs).value

    def grad(a: np.ndarray) -> np.ndarray:
        g = gradient_Fn(VectorField(grid, a), prob.mask, prob.kernel,
                        prob.phi, prob.m, pairs=pairs).values.copy()
        g[~free] = 0.0
        return g

    e = energy(vals)
    gr = grad(vals)
    trace = [e]
    qn = _TwoLoop(st.memory) if st.use_quasi_newton else None
    converged = float(np.max(np.abs(gr))) <= tol
    it = 0
    while not converged and it < st.max_iters:
        it += 1
        d = qn.direction(gr.ravel()).reshape(gr.shape) if qn else -gr
        slope = float(np.sum(d * gr))
        if slope >= 0:  # not a descent direction; fall back
            d = -gr
            slope = -float(np.sum(gr * gr))
        t = 1.0
        accepted = False
        for _ in range(60):
            cand = vals + t * d
            cand[~free] = prob.g.values[~free]
            e_new = energy(cand)
            if np.isfinite(e_new) and e_new <= e + st.armijo_slope * t * slope:
                accepted = True
                break
            t *= st.armijo_shrink
        if not accepted:
            break
        gr_new = grad(cand)
        if qn:
            qn.push((cand - vals).ravel(), (gr_new - gr).ravel())
        vals, e, gr = cand, e_new, gr_new
        trace.append(e)
        converged = float(np.max(np.abs(gr))) <= tol
    return MinimizeResult(VectorField(grid, vals), np.asarray(trace),
                          float(np.max(np.abs(gr))), it, converged)


def default_starts(prob: DirichletProblem, seed: int = 0) -> list[VectorField]:
    """The three standard starts: the datum, a sinusoidal perturbation of it,
    and a laminate-type zigzag perturbation."""
    grid = prob.mask.grid
    x = grid.nodes()
    lo = np.asarray(grid.origin)
    span = np.asarray(grid.extent)
    rng = np.random.Generator(np.random.Philox(seed))
    amp = 0.05 * float(np.min(span))

    sin_pert = prob.g.values + amp * np.stack(
        [np.prod(np.sin(np.pi * (x - lo) / span), axis=1)
         * (1.0 + 0.1 * rng.standard_normal()) for _ in range(grid.dim)], axis=-1)

    k = 4
    zig = prob.g.values.copy()
    for i in range(grid.dim):
        ti = (x[:, i] - lo[i]) / span[i]
        zig[:, i] = zig[:, i] + (amp / k) * (laminate_profile(0.5, k * ti) - 0.09375)
    return [prob.g, VectorField(grid, sin_pert), VectorField(grid, zig)]


def minimize_multistart(prob: DirichletProblem, n_starts: int = 3,
                        seed: int = 0) -> MinimizeResult:
    """Best-of minimization over the standard starts (the energy is nonconvex)."""
    pairs = build_pairs(prob.mask.grid, prob.mask, prob.kernel.support_radius)
    best = None
    for v0 in default_starts(prob, seed)[:n_starts]:
        res = minimize_Fng(prob, v0, pairs=pairs)
        if best is None or res.energy_trace[-1] < best.energy_trace[-1]:
            best = res
    return best


# ---------------------------------------------------------------------------
# linearization driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearizationRow:
    eps: float
    E_eps: float
    abs_err: float
    flagged: bool


@dataclass(frozen=True)
class LinearizationTable:
    rows: tuple[LinearizationRow, ...]
    E0: float
    slope: float | None

    def errors(self) -> np.ndarray:
        return np.array([r.abs_err for r in self.rows if not r.flagged])


def linearization_experiment(u: VectorField, w: MicroPotential, m: float,
                             eps_list: Sequence[float],
                             l: VectorField | None = None,
                             support_radius: float = 1.0) -> LinearizationTable:
    """Convergence of the rescaled energies to the quadratic limit at fixed u.

    Evaluates E_eps(u) for each eps and compares against the quadratic energy
    built from the interaction kernel of w; rows where a bond leaves the
    admissible strain domain are flagged and excluded from the rate fit.
    """
    grid = u.grid
    pairs = build_pairs(grid, None, support_radius)
    rho = derived_interaction_kernel(w)
    E0 = energy_E0(u, rho, l, support_radius, pairs=pairs).value
    rows = []
    for eps in eps_list:
        try:
            val = energy_E_eps(u, w, m, eps, l, support_radius, pairs=pairs).value
            rows.append(LinearizationRow(float(eps), float(val),
                                         abs(val - E0), False))
        except StrainDomainError:
            rows.append(LinearizationRow(float(eps), float("nan"),
                                         float("nan"), True))
    good = [(r.eps, r.abs_err) for r in rows if not r.flagged and r.abs_err > 0]
    slope = None
    if len(good) >= 2:
        le = np.log([g[0] for g in good])
        lv = np.log([g[1] for g in good])
        slope = float(np.polyfit(le, lv, 1)[0])
    return LinearizationTable(tuple(rows), float(E0), slope)


# ---------------------------------------------------------------------------
# localization driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LocalizationRow:
    n: int
    energy: float
    lp_dist_prev: float
    lower_int: float
    tilde_int: float


def _discrete_gradients(v: VectorField) -> np.ndarray:
    """Per-node gradient matrices by central differences, shape (N, d, d)."""
    g = v.grid
    d = g.dim
    vals = v.values.reshape(*g.n_cells, d)
    out = np.empty((g.n_nodes, d, d))
    for c in range(d):
        gr = np.gradient(vals[..., c], *g.h, axis=tuple(range(d)), edge_order=1)
        gr = [np.asarray(x) for x in np.atleast_1d(gr)] if d > 1 else [np.asarray(gr)]
        for a in range(d):
            out[:, c, a] = gr[a].ravel()
    return out


def localization_experiment(g_datum: Callable[[np.ndarray], np.ndarray] | np.ndarray,
                            phi: Potential, m: float, seq: KernelSequence,
                            n_values: Sequence[int],
                            grid_law: Callable[[int], Grid],
                            collar_width: float = 0.1,
                            lp: float | None = None,
                            quad_order: int = 64,
                            settings: SolverSettings | None = None,
                            seed: int = 0) -> list[LocalizationRow]:
    """Constrained minimizers along a concentrating kernel sequence.

    For each n a Dirichlet problem with datum g is minimized; the report
    lists the minimal energies, discrete L^p distances between successive
    minimizers (injected to the finer grid by nearest-node sampling), and
    the integrals of the two density bounds over the discrete gradient of
    the minimizer, which bracket the limiting energy.
    """
    if lp is None:
        lp = m * phi.p
    rows: list[LocalizationRow] = []
    prev: VectorField | None = None
    for n in n_values:
        grid = grid_law(n)
        kernel = seq[n]
        mask = full_mask(grid, collar_width)
        x = grid.nodes()
        gv = np.asarray(g_datum(x) if callable(g_datum) else x @ np.atleast_2d(g_datum).T)
        if gv.ndim == 1:
            gv = gv[:, None]
        prob = DirichletProblem(mask, VectorField(grid, gv), kernel, phi, m,
                                settings or SolverSettings())
        res = minimize_multistart(prob, seed=seed)
        vstar = res.v

        dist = float("nan")
        if prev is not None:
            fine, coarse = (vstar, prev) if vstar.grid.n_nodes >= prev.grid.n_nodes else (prev, vstar)
            xf = fine.grid.nodes()
            inj = np.stack([coarse.values[coarse.grid.nearest_node(p)] for p in xf])
            diff = np.linalg.norm(fine.values - inj, axis=1)
            dist = float((fine.grid.cell_volume * np.sum(diff**lp)) ** (1.0 / lp))

        grads = _discrete_gradients(vstar)[mask.active]
        q = sphere_quadrature(grid.dim, quad_order)
        vol = grid.cell_volume
        lower_int = float(vol * np.sum(density_lower_batch(grads, phi, m, q)))
        tilde_int = float(vol * np.sum(density_tilde_batch(grads, phi, m, q)))
        rows.append(LocalizationRow(int(n), float(res.energy_trace[-1]),
                                    dist, lower_int, tilde_int))
        prev = vstar
    return rows
