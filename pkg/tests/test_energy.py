"""Discrete double-integral energies against brute-force oracles, gradient
checks, and the quadratic small-displacement identities."""

import numpy as np
import pytest

from peribond.energy import (PairSet, StrainDomainError, build_pairs, energy_E0,
                             energy_E_eps, energy_Fn, gradient_Fn, seminorm_W,
                             seminorm_Xrho, stretches)
from peribond.grids import (VectorField, affine_field, box_grid,
                            field_from_function, full_mask, unit_interval_grid)
from peribond.kernels import box_kernel, make_rescaled
from peribond.materials import catalog_potential, power_potential, strain


def brute_force_pairs(grid, radius):
    """O(N^2) oracle for the pair enumeration."""
    x = grid.nodes()
    out = set()
    for i in range(grid.n_nodes):
        for j in range(i + 1, grid.n_nodes):
            if np.linalg.norm(x[j] - x[i]) <= radius + 1e-12:
                out.add((i, j))
    return out


def brute_force_energy(v, kernel, phi, m):
    """O(N^2) oracle for the double-sum energy on the full domain."""
    g = v.grid
    x = g.nodes()
    total = 0.0
    for i in range(g.n_nodes):
        for j in range(g.n_nodes):
            if i == j:
                continue
            r = np.linalg.norm(x[j] - x[i])
            rho = float(kernel(np.array([r]))[0])
            if rho == 0.0:
                continue
            t = np.linalg.norm(v.values[j] - v.values[i]) / r
            total += rho * phi(abs(strain(m, t)))
    return total * g.cell_volume**2


class TestPairSet:
    @pytest.mark.parametrize("d,n,radius", [(1, 12, 0.3), (2, 6, 0.4), (3, 4, 0.6)])
    def test_matches_brute_force(self, d, n, radius):
        g = box_grid(d, 0.0, 1.0, n)
        pairs = build_pairs(g, None, radius)
        got = {(min(i, j), max(i, j)) for i, j in zip(pairs.i, pairs.j)}
        assert got == brute_force_pairs(g, radius)
        assert len(got) == len(pairs)  # no duplicates

    def test_geometry_exact(self):
        g = box_grid(2, 0.0, 1.0, 8)
        pairs = build_pairs(g, None, 0.4)
        x = g.nodes()
        dx = x[pairs.j] - x[pairs.i]
        np.testing.assert_allclose(np.linalg.norm(dx, axis=1), pairs.r, rtol=1e-15)
        np.testing.assert_allclose(dx / pairs.r[:, None], pairs.dir, rtol=1e-15)

    def test_deterministic_order(self):
        g = box_grid(2, 0.0, 1.0, 10)
        a = build_pairs(g, None, 0.35)
        b = build_pairs(g, None, 0.35)
        np.testing.assert_array_equal(a.i, b.i)
        np.testing.assert_array_equal(a.j, b.j)

    def test_mask_restriction(self):
        g = unit_interval_grid(10)
        active = np.zeros(10, dtype=bool)
        active[2:7] = True
        pairs = PairSet(g, active, 0.25)
        assert set(pairs.i) | set(pairs.j) <= set(range(2, 7))


class TestEnergyFn:
    def test_identity_has_zero_energy(self):
        g = box_grid(2, 0.0, 1.0, 12)
        v = affine_field(g, np.eye(2))
        rep = energy_Fn(v, full_mask(g), make_rescaled(box_kernel(2), 0.3),
                        power_potential(2.0), 1.0)
        # diagonal-offset bonds pick up one ulp of stretch error
        assert abs(rep.value) < 1e-28

    def test_rotation_has_zero_energy(self):
        g = box_grid(2, 0.0, 1.0, 10)
        th = 0.83
        U = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        v = affine_field(g, U)
        rep = energy_Fn(v, full_mask(g), make_rescaled(box_kernel(2), 0.3),
                        power_potential(2.0), 1.0)
        assert abs(rep.value) < 1e-28

    @pytest.mark.parametrize("m", [1.0, 2.0])
    def test_matches_brute_force(self, m):
        g = box_grid(2, 0.0, 1.0, 6)
        rng = np.random.default_rng(5)
        v = VectorField(g, g.nodes() + 0.1 * rng.standard_normal((g.n_nodes, 2)))
        kernel = make_rescaled(box_kernel(2), 0.45)
        phi = power_potential(2.0)
        rep = energy_Fn(v, full_mask(g), kernel, phi, m)
        assert rep.value == pytest.approx(brute_force_energy(v, kernel, phi, m),
                                          rel=1e-12)

    def test_deterministic_value(self):
        g = box_grid(2, 0.0, 1.0, 16)
        rng = np.random.default_rng(9)
        v = VectorField(g, g.nodes() + 0.05 * rng.standard_normal((g.n_nodes, 2)))
        kernel = make_rescaled(box_kernel(2), 0.2)
        vals = {energy_Fn(v, full_mask(g), kernel, power_potential(2.0), 1.0).value
                for _ in range(5)}
        assert len(vals) == 1

    def test_1d_affine_stretch_value(self):
        # rho_delta box on (0,1), v = 2x, Phi = t^2, m = 1: the continuum
        # value is Phi(1) * (1 - delta/2) after the boundary deficit
        delta = 0.1
        g = unit_interval_grid(200)
        v = affine_field(g, np.array([[2.0]]))
        rep = energy_Fn(v, full_mask(g), make_rescaled(box_kernel(1), delta),
                        power_potential(2.0), 1.0)
        assert rep.value == pytest.approx(1.0 - delta / 2, rel=2e-2)


class TestGradient:
    @pytest.mark.parametrize("d,m,scale", [(1, 1.0, 1.0), (1, 2.0, 4.0),
                                           (2, 1.0, 1.0), (2, 2.0, 4.0)])
    def test_matches_finite_differences(self, d, m, scale):
        g = box_grid(d, 0.0, 1.0, 8 if d < 3 else 4)
        kernel = make_rescaled(box_kernel(d), 0.35)
        phi = power_potential(2.0, scale)
        mask = full_mask(g)
        pairs = build_pairs(g, mask, kernel.support_radius)
        rng = np.random.default_rng(17 + d)
        vals = g.nodes() + 0.1 * rng.standard_normal((g.n_nodes, d))
        v = VectorField(g, vals)
        grad = gradient_Fn(v, mask, kernel, phi, m, pairs=pairs).values
        step = 1e-6
        for k in rng.integers(0, g.n_nodes, size=4):
            for c in range(d):
                vp, vm = vals.copy(), vals.copy()
                vp[k, c] += step
                vm[k, c] -= step
                ep = energy_Fn(VectorField(g, vp), mask, kernel, phi, m, pairs=pairs).value
                em = energy_Fn(VectorField(g, vm), mask, kernel, phi, m, pairs=pairs).value
                fd = (ep - em) / (2 * step)
                assert grad[k, c] == pytest.approx(fd, rel=1e-5, abs=1e-9)

    def test_rejects_nonsmooth_profile(self):
        from peribond.materials import tabulated_potential
        g = unit_interval_grid(8)
        a = np.linspace(0.0, 2.0, 10)
        phi = tabulated_potential(a, a.copy(), p=2.0, C0=0.0, C1=1.0)
        assert not phi.smooth_at_zero
        with pytest.raises(ValueError):
            gradient_Fn(affine_field(g, np.array([[1.5]])), full_mask(g),
                        make_rescaled(box_kernel(1), 0.25), phi)

    def test_zero_at_minimum(self):
        g = unit_interval_grid(16)
        v = affine_field(g, np.array([[1.0]]))
        grad = gradient_Fn(v, full_mask(g), make_rescaled(box_kernel(1), 0.2),
                           power_potential(2.0)).values
        np.testing.assert_allclose(grad, 0.0, atol=1e-14)


class TestEEps:
    def test_quadratic_1d_exact(self):
        # quadratic Psi and collinear geometry: E_eps = E_0 identically
        g = unit_interval_grid(64)
        w = catalog_potential("mbm_smooth", c=2.0)
        u = field_from_function(g, lambda x: x**2)
        pairs = build_pairs(g, None, 0.2)
        from peribond.kernels import derived_interaction_kernel
        e0 = energy_E0(u, derived_interaction_kernel(w), support_radius=0.2,
                       pairs=pairs).value
        for eps in (0.2, 0.05):
            ee = energy_E_eps(u, w, 1.0, eps, support_radius=0.2, pairs=pairs).value
            assert ee == pytest.approx(e0, abs=1e-12)

    def test_strain_domain_error(self):
        # eps large enough to collapse a bond: v(y) = v(x) somewhere
        g = unit_interval_grid(32)
        u = field_from_function(g, lambda x: -x)  # i + eps*u collapses at eps=1
        w = catalog_potential("quartic")
        with pytest.raises(StrainDomainError):
            energy_E_eps(u, w, 1.0, 1.0, support_radius=0.2)

    def test_load_term(self):
        g = unit_interval_grid(50)
        w = catalog_potential("mbm_smooth")
        u = field_from_function(g, lambda x: np.ones_like(x))
        l = field_from_function(g, lambda x: 2 * np.ones_like(x))
        with_l = energy_E_eps(u, w, 1.0, 0.1, l=l, support_radius=0.2).value
        without_l = energy_E_eps(u, w, 1.0, 0.1, support_radius=0.2).value
        assert with_l == pytest.approx(without_l - 2.0, rel=1e-12)


class TestSeminorms:
    def test_affine_seminorm_W(self):
        # [v]_W^p with v = x: stretches identically 1, so the value is the
        # kernel mass over the restricted double integral
        delta = 0.05
        g = unit_interval_grid(400)
        v = affine_field(g, np.array([[1.0]]))
        val = seminorm_W(v, make_rescaled(box_kernel(1), delta), p=2.0)
        assert val == pytest.approx(1.0 - delta / 2, rel=1e-2)

    def test_Xrho_matches_E0_without_load(self):
        g = box_grid(2, 0.0, 1.0, 10)
        rng = np.random.default_rng(2)
        u = VectorField(g, rng.standard_normal((g.n_nodes, 2)))
        kernel = make_rescaled(box_kernel(2), 0.3)
        sn = seminorm_Xrho(u, kernel)
        e0 = energy_E0(u, kernel).value
        assert e0 == pytest.approx(0.5 * sn, rel=1e-12)


class TestStretches:
    def test_affine(self):
        g = box_grid(2, 0.0, 1.0, 8)
        F = np.array([[2.0, 0.0], [0.0, 0.5]])
        v = affine_field(g, F)
        pairs = build_pairs(g, None, 0.4)
        t = stretches(v, pairs)
        expected = np.linalg.norm(pairs.dir @ F.T, axis=1)
        np.testing.assert_allclose(t, expected, rtol=1e-12)
