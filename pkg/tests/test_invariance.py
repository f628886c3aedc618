"""Tests for constraint assembly, certificates, and reach-set bookkeeping."""

import numpy as np
import pytest

from zonoinv.errors import DimensionError, UnsupportedError
from zonoinv.invariance import (
    AffineSystem,
    InvarianceProblem,
    assemble,
    assemble_sfg,
    assemble_utpd,
    certificate_violation,
    check_invariance_certificate,
    drift_sum,
    reach_zonotope,
    warm_start_point,
)
from zonoinv.parameterizations import SfgParameterization, UtpdParameterization
from zonoinv.zonotope import Box, Zonotope


def unit_box(d):
    return Box(-np.ones(d), np.ones(d))


def random_stable_system(rng, d, spectral_radius=0.8):
    a = rng.standard_normal((d, d))
    a *= spectral_radius / max(np.max(np.abs(np.linalg.eigvals(a))), 1e-12)
    w = 0.05 * rng.standard_normal(d)
    return AffineSystem(a, w)


class TestAffineSystem:
    def test_basic(self):
        sys_ = AffineSystem([[0.5, 0.1], [0.0, 0.5]], [0.1, -0.2])
        assert sys_.dim == 2
        assert sys_.A.shape == (2, 2)

    def test_rejects_nonsquare(self):
        with pytest.raises(DimensionError):
            AffineSystem(np.zeros((2, 3)), np.zeros(2))

    def test_rejects_mismatched_offset(self):
        with pytest.raises(DimensionError):
            AffineSystem(np.eye(2), np.zeros(3))


class TestDrift:
    def test_zero_at_time_zero(self):
        sys_ = AffineSystem(0.5 * np.eye(3), np.ones(3))
        assert np.array_equal(drift_sum(sys_, 0), np.zeros(3))

    def test_hand_values(self):
        # d(1) = w, d(2) = A w + w.
        a = np.array([[0.5, 0.2], [0.0, 0.3]])
        w = np.array([1.0, 2.0])
        sys_ = AffineSystem(a, w)
        assert np.allclose(drift_sum(sys_, 1), w)
        assert np.allclose(drift_sum(sys_, 2), a @ w + w)

    def test_scalar_geometric_series(self):
        # For scalar a, drift(t) = w * (1 - a^t) / (1 - a).
        sys_ = AffineSystem([[0.5]], [3.0])
        for t in range(8):
            expected = 3.0 * (1 - 0.5**t) / (1 - 0.5)
            assert drift_sum(sys_, t)[0] == pytest.approx(expected, rel=1e-14)

    def test_rejects_negative_time(self):
        sys_ = AffineSystem([[0.5]], [0.0])
        with pytest.raises(DimensionError):
            drift_sum(sys_, -1)


class TestReachZonotope:
    def test_time_zero_is_identity(self):
        z = Zonotope([1.0, 2.0], [[1.0, 0.5], [0.0, 1.0]])
        sys_ = AffineSystem(0.5 * np.eye(2), [0.1, 0.1])
        r0 = reach_zonotope(sys_, z, 0)
        assert np.array_equal(r0.center, z.center)
        assert np.array_equal(r0.generators, z.generators)

    def test_matches_step_recursion(self):
        rng = np.random.default_rng(11)
        sys_ = random_stable_system(rng, 3)
        z = Zonotope(rng.standard_normal(3), rng.standard_normal((3, 4)))
        c, g = z.center.copy(), z.generators.copy()
        for t in range(6):
            r = reach_zonotope(sys_, z, t)
            assert np.allclose(r.center, c, atol=1e-12)
            assert np.allclose(r.generators, g, atol=1e-12)
            c = sys_.A @ c + sys_.w
            g = sys_.A @ g

    def test_dimension_mismatch(self):
        sys_ = AffineSystem(np.eye(2), np.zeros(2))
        with pytest.raises(DimensionError):
            reach_zonotope(sys_, Zonotope(np.zeros(3), np.eye(3)), 1)


class TestProblemValidation:
    def test_rejects_box_mismatch(self):
        sys_ = AffineSystem(np.eye(2), np.zeros(2))
        with pytest.raises(DimensionError):
            InvarianceProblem(sys_, unit_box(3), 5, SfgParameterization(np.eye(2)), "lgv")

    def test_rejects_parameterization_mismatch(self):
        sys_ = AffineSystem(np.eye(2), np.zeros(2))
        with pytest.raises(DimensionError):
            InvarianceProblem(sys_, unit_box(2), 5, SfgParameterization(np.eye(3)), "lgv")

    def test_rejects_negative_horizon(self):
        sys_ = AffineSystem(np.eye(2), np.zeros(2))
        with pytest.raises(DimensionError):
            InvarianceProblem(sys_, unit_box(2), -1, SfgParameterization(np.eye(2)), "lgv")

    def test_rejects_bad_objective_pairing(self):
        sys_ = AffineSystem(np.eye(2), np.zeros(2))
        with pytest.raises(UnsupportedError):
            InvarianceProblem(sys_, unit_box(2), 5, UtpdParameterization(2), "ss")


class TestAssembleSfg:
    def test_shapes(self):
        # d = 3, p = 6, T = 30: n = 9, m = 2*3*31 + 6 = 192.
        rng = np.random.default_rng(0)
        sys_ = random_stable_system(rng, 3)
        param = SfgParameterization(np.hstack([np.eye(3), rng.standard_normal((3, 3))]))
        problem = InvarianceProblem(sys_, unit_box(3), 30, param, "lgv")
        system = assemble_sfg(problem)
        assert system.shape == (192, 9)
        assert system.layout.n == 9 and system.layout.m == 192
        assert system.layout.center == slice(0, 3)
        assert system.layout.free == slice(3, 9)
        assert system.layout.elim_blocks == ()

    def test_hand_rows_scalar(self):
        # d = 1, p = 1, T = 1, A = [[0.5]], w = [0.25], box [-1, 1],
        # template [[1]]. Rows: t=0 lower/upper, t=1 lower/upper, floor.
        sys_ = AffineSystem([[0.5]], [0.25])
        param = SfgParameterization([[1.0]], scale_floor=1e-6)
        problem = InvarianceProblem(sys_, unit_box(1), 1, param, "lgv")
        system = assemble_sfg(problem)
        dense = system.dense()
        expected_c = np.array([
            [-1.0, 1.0],     # -c + |G| gamma <= 0 - (-1)
            [1.0, 1.0],      # +c + |G| gamma <= 1 - 0
            [-0.5, 0.5],     # t=1: -0.5 c + 0.5 gamma <= 0.25 + 1
            [0.5, 0.5],      # t=1: 0.5 c + 0.5 gamma <= 1 - 0.25
            [0.0, -1.0],     # -gamma <= -floor
        ])
        expected_b = np.array([1.0, 1.0, 1.25, 0.75, -1e-6])
        assert np.allclose(dense, expected_c, atol=1e-15)
        assert np.allclose(system.b, expected_b, atol=1e-15)

    def test_slacks_match_certificate(self):
        # A point is feasible for the assembled system exactly when the
        # zonotope it encodes has zero certificate violation.
        rng = np.random.default_rng(21)
        for _ in range(20):
            d, p, T = 2, 4, 8
            sys_ = random_stable_system(rng, d)
            template = rng.standard_normal((d, p))
            param = SfgParameterization(template, scale_floor=1e-9)
            problem = InvarianceProblem(sys_, unit_box(d), T, param, "lgv")
            system = assemble_sfg(problem)
            center = 0.3 * rng.standard_normal(d)
            gamma = rng.uniform(0.01, 0.6, p)
            z = system.layout.encode(center, gamma)
            viol = certificate_violation(sys_, problem.box, T, Zonotope(center, template @ np.diag(gamma)))
            slack_min = float(np.min(system.slacks(z)))
            if viol == 0.0:
                assert slack_min >= -1e-12
            else:
                assert slack_min == pytest.approx(-viol, rel=1e-9, abs=1e-12)

    def test_mul_count_formula(self):
        rng = np.random.default_rng(3)
        sys_ = random_stable_system(rng, 3)
        param = SfgParameterization(rng.standard_normal((3, 5)))
        problem = InvarianceProblem(sys_, unit_box(3), 7, param, "lgv")
        system = assemble_sfg(problem)
        d, p, T = 3, 5, 7
        assert system.assembly_mul_count == T * d**3 + (T + 1) * d * d * p

    def test_rejects_wrong_kind(self):
        sys_ = AffineSystem(np.eye(2), np.zeros(2))
        problem = InvarianceProblem(sys_, unit_box(2), 3, UtpdParameterization(2), "lgv")
        with pytest.raises(UnsupportedError):
            assemble_sfg(problem)


class TestAssembleUtpd:
    def test_shapes(self):
        # d = 3, T = 30: n = 3 + 6 + 3 + 30*9 = 282,
        # m = 3 + 6 + 6 + 30*(18 + 6) = 735.
        rng = np.random.default_rng(5)
        sys_ = random_stable_system(rng, 3)
        problem = InvarianceProblem(sys_, unit_box(3), 30, UtpdParameterization(3), "lgv")
        system = assemble_utpd(problem)
        assert system.shape == (735, 282)
        layout = system.layout
        assert layout.center == slice(0, 3)
        assert layout.free == slice(3, 9)
        assert layout.aux0 == slice(9, 12)
        assert layout.lifted == slice(12, 282)
        assert len(layout.elim_blocks) == 30 * 3
        assert all(len(block) == 3 for block in layout.elim_blocks)

    def test_horizon_zero_has_no_lifted_block(self):
        sys_ = AffineSystem(0.5 * np.eye(2), np.zeros(2))
        problem = InvarianceProblem(sys_, unit_box(2), 0, UtpdParameterization(2), "lgv")
        system = assemble_utpd(problem)
        # n = 2 + 3 + 1, m = 2 + 4 + 2.
        assert system.shape == (8, 6)
        assert system.layout.lifted is None
        assert system.layout.elim_blocks == ()

    def test_exact_lift_matches_certificate(self):
        # Encoding a triangular zonotope with exact absolute-value lifts is
        # feasible iff the certificate reports no violation; the worst slack
        # equals minus the violation otherwise.
        rng = np.random.default_rng(31)
        for _ in range(20):
            d, T = 3, 6
            sys_ = random_stable_system(rng, d)
            param = UtpdParameterization(d, diag_floor=1e-9)
            problem = InvarianceProblem(sys_, unit_box(d), T, param, "lgv")
            system = assemble_utpd(problem)
            g = np.triu(0.4 * rng.standard_normal((d, d)))
            np.fill_diagonal(g, rng.uniform(0.05, 0.5, d))
            center = 0.3 * rng.standard_normal(d)
            i_idx, j_idx = np.triu_indices(d, k=1)
            aux0 = np.abs(g[i_idx, j_idx])
            powers = np.stack([np.linalg.matrix_power(sys_.A, t) for t in range(T + 1)])
            lifted = np.abs(powers[1:] @ g)
            z = system.layout.encode(center, param.pack(g), aux0=aux0, lifted=lifted)
            viol = certificate_violation(sys_, problem.box, T, Zonotope(center, g))
            slack_min = float(np.min(system.slacks(z)))
            if viol == 0.0:
                assert slack_min >= -1e-12
            else:
                # Aux rows are tight (zero slack); only box rows can go negative.
                assert slack_min == pytest.approx(-viol, rel=1e-9, abs=1e-12)

    def test_decode_encode_roundtrip(self):
        rng = np.random.default_rng(41)
        sys_ = random_stable_system(rng, 3)
        problem = InvarianceProblem(sys_, unit_box(3), 4, UtpdParameterization(3), "lgv")
        layout = assemble_utpd(problem).layout
        z = rng.standard_normal(layout.n)
        diag = layout.free.start + problem.parameterization.diag_positions()
        z[diag] = rng.uniform(0.5, 2.0, 3)
        parts = layout.decode(z)
        back = layout.encode(parts["center"], parts["free"], aux0=parts["aux0"], lifted=parts["lifted"])
        assert np.array_equal(back, z)

    def test_decode_generators_are_triangular(self):
        sys_ = AffineSystem(0.5 * np.eye(2), np.zeros(2))
        problem = InvarianceProblem(sys_, unit_box(2), 2, UtpdParameterization(2), "lgv")
        layout = assemble_utpd(problem).layout
        z = layout.encode([0.1, -0.2], [2.0, 3.0, 4.0], aux0=[3.0], lifted=np.ones((2, 2, 2)))
        parts = layout.decode(z)
        assert np.array_equal(parts["generators"], [[2.0, 3.0], [0.0, 4.0]])
        zono = layout.zonotope_of(z)
        assert np.array_equal(zono.center, [0.1, -0.2])

    def test_mul_count_formula(self):
        rng = np.random.default_rng(6)
        sys_ = random_stable_system(rng, 4)
        problem = InvarianceProblem(sys_, unit_box(4), 9, UtpdParameterization(4), "lgv")
        system = assemble_utpd(problem)
        d, T = 4, 9
        assert system.assembly_mul_count == T * d**3 + T * d * d * (d + 1)

    def test_assemble_dispatch(self):
        rng = np.random.default_rng(7)
        sys_ = random_stable_system(rng, 2)
        p_sfg = InvarianceProblem(sys_, unit_box(2), 3, SfgParameterization(np.eye(2)), "lgv")
        p_utpd = InvarianceProblem(sys_, unit_box(2), 3, UtpdParameterization(2), "lgv")
        assert assemble(p_sfg).layout.kind == "sfg"
        assert assemble(p_utpd).layout.kind == "utpd"


class TestWarmStart:
    def test_strictly_feasible_for_contractive_centered_system(self):
        rng = np.random.default_rng(51)
        for d, make_param in [(3, lambda: SfgParameterization(np.eye(3))), (3, lambda: UtpdParameterization(3))]:
            a = rng.standard_normal((d, d))
            a *= 0.7 / np.max(np.abs(np.linalg.eigvals(a)))
            sys_ = AffineSystem(a, np.zeros(d))
            problem = InvarianceProblem(sys_, unit_box(d), 10, make_param(), "lgv")
            system = assemble(problem)
            z0 = warm_start_point(problem, system.layout)
            assert float(np.min(system.slacks(z0))) > 0.0

    def test_can_be_infeasible_under_large_drift(self):
        # Large offset pushes the box midpoint trajectory outside: the warm
        # start is only a candidate, and callers must check it.
        sys_ = AffineSystem([[0.5]], [3.0])
        param = SfgParameterization([[1.0]])
        problem = InvarianceProblem(sys_, unit_box(1), 5, param, "lgv")
        system = assemble(problem)
        z0 = warm_start_point(problem, system.layout)
        assert float(np.min(system.slacks(z0))) < 0.0


class TestCertificate:
    def test_contraction_has_zero_violation(self):
        sys_ = AffineSystem(0.5 * np.eye(2), np.zeros(2))
        z = Zonotope(np.zeros(2), 0.9 * np.eye(2))
        assert certificate_violation(sys_, unit_box(2), 10, z) == 0.0
        assert check_invariance_certificate(sys_, unit_box(2), 10, z)

    def test_known_violation_amount(self):
        # Center (0.6, 0), generators 0.5 I, horizon 0: reach set spans
        # [0.1, 1.1] in coordinate 0, so it exceeds the unit box by 0.1.
        sys_ = AffineSystem(np.zeros((2, 2)), np.zeros(2))
        z = Zonotope([0.6, 0.0], 0.5 * np.eye(2))
        viol = certificate_violation(sys_, unit_box(2), 0, z)
        assert viol == pytest.approx(0.1, abs=1e-15)
        assert not check_invariance_certificate(sys_, unit_box(2), 0, z)
        assert check_invariance_certificate(sys_, unit_box(2), 0, z, tol=0.2)

    def test_violation_can_appear_later_in_time(self):
        # A rotation by 90 degrees moves a thin zonotope's long axis into a
        # tight coordinate after one step.
        rot = np.array([[0.0, -1.0], [1.0, 0.0]])
        sys_ = AffineSystem(rot, np.zeros(2))
        box = Box([-2.0, -1.0], [2.0, 1.0])
        z = Zonotope(np.zeros(2), np.diag([1.5, 0.5]))
        assert certificate_violation(sys_, box, 0, z) == 0.0
        assert certificate_violation(sys_, box, 1, z) == pytest.approx(0.5, abs=1e-15)

    def test_dimension_mismatch(self):
        sys_ = AffineSystem(np.eye(2), np.zeros(2))
        with pytest.raises(DimensionError):
            certificate_violation(sys_, unit_box(3), 1, Zonotope(np.zeros(2), np.eye(2)))
