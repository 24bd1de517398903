import cmath
import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from g2kernels.automorphisms import preimage_arrays, random_g2_points, symmetrize
from g2kernels.errors import (
    CancellationError,
    DomainError,
    NonConvergenceError,
    UnsupportedPowerError,
)
from g2kernels.kernels import (
    DetCurvature,
    EvalOptions,
    MatrixCurvature,
    Power,
    Product,
    SymmetricC,
    WeightedBergman,
    antidiagonal_H_coefficient,
    antidiagonal_H_series,
    binom,
    eval_bergman_raw,
    eval_bergman_series,
    eval_H,
    eval_kernel,
    eval_kernel_arrays,
    eval_power,
    eval_symmetric,
    format_spec,
    h_coefficients,
    h_tilde,
    parse_spec,
    royal_slice,
)


def lambda1_oracle(u1, u2, v1, v2):
    z1, z2 = preimage_arrays(u1, u2)
    w1, w2 = preimage_arrays(v1, v2)
    prod = 1.0
    for z in (z1, z2):
        for w in (w1, w2):
            prod = prod * (1 - z * np.conj(w))
    return 1.0 / (2.0 * prod)


def _pairs(n, seed, radius=0.9):
    rng = np.random.default_rng(seed)
    u1, u2 = random_g2_points(rng, n, radius)
    v1, v2 = random_g2_points(rng, n, radius)
    return u1, u2, v1, v2


class TestSpecs:
    @pytest.mark.parametrize(
        "text",
        [
            "bergman:l=2",
            "symC:l=1",
            "detcurv:l=2,nu=1",
            "matcurv:l=2,nu=0",
            "power:bergman:l=2,nu=1.5",
            "product:[bergman:l=1;power:bergman:l=2,nu=0.5]",
        ],
    )
    def test_round_trip(self, text):
        spec = parse_spec(text)
        assert parse_spec(format_spec(spec)) == spec

    @pytest.mark.parametrize("text", ["bergman", "bergman:x=2", "foo:l=1", "power:bergman:l=1", "bergman:l=-1"])
    def test_bad_specs(self, text):
        with pytest.raises(DomainError):
            parse_spec(text)

    def test_options_validated(self):
        with pytest.raises(DomainError):
            EvalOptions(series_threshold=0.0)


class TestBinomial:
    def test_integer_zeros(self):
        assert binom(1, 3) == 0 and binom(2, 3) == 0 and binom(1, 4) == 0

    def test_values(self):
        assert binom(2.5, 2) == pytest.approx(2.5 * 1.5 / 2)
        assert binom(5, 2) == 10


class TestBergman:
    def test_raw_example(self):
        assert eval_bergman_raw(1, (0.5, 0), (0.5, 0)) == pytest.approx(2 / 3, rel=1e-14)

    def test_raw_rejects_diagonal(self):
        with pytest.raises(DomainError):
            eval_bergman_raw(2, (0.5, 0.5), (0.5, 0.5))

    def test_raw_flags_cancellation(self):
        with pytest.raises(CancellationError):
            eval_bergman_raw(2, (0.3, 0.3 + 1e-9), (0.2, 0.2 + 1e-9))

    def test_series_examples(self):
        assert eval_bergman_series(2, (0, 0), (0, 0)) == pytest.approx(1)
        assert eval_bergman_series(2, (0.5, 0.5), (0.5, 0.5)) == pytest.approx(4096 / 729, rel=1e-13)
        assert eval_bergman_series(3, (0, 0), (0, 0)) == pytest.approx(1.5)

    def test_series_refuses_divergent_region(self):
        with pytest.raises(NonConvergenceError):
            eval_bergman_series(2.5, (0.9, -0.9), (0.9, -0.9))

    def test_royal_slice(self):
        rng = np.random.default_rng(0)
        for lam in (0.7, 2.0, 3.5):
            for _ in range(10):
                z = 0.8 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
                w = tuple(0.8 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform()) for _ in range(2))
                s = eval_bergman_series(lam, (z, z), w)
                assert abs(s - royal_slice(lam, z, w)) <= 1e-10 * abs(s)

    def test_lambda1_oracle(self):
        u1, u2, v1, v2 = _pairs(500, 1)
        K = eval_kernel_arrays(WeightedBergman(1), u1, u2, v1, v2)
        assert np.max(np.abs(K / lambda1_oracle(u1, u2, v1, v2) - 1)) <= 1e-12

    def test_kernel_examples(self):
        assert eval_kernel(WeightedBergman(1), (0, 0), (0.5, 0)) == pytest.approx(0.5)
        for lam in (0.5, 1, 2.7):
            assert eval_kernel(WeightedBergman(lam), (0, 0), (0, 0)) == pytest.approx(lam / 2)

    @pytest.mark.parametrize("lam", [0.5, 1.0, 2.5, 4.0])
    def test_path_agreement_near_threshold(self, lam):
        tau = EvalOptions().series_threshold
        rng = np.random.default_rng(2)
        worst = 0.0
        for _ in range(100):
            target = tau * rng.uniform(0.5, 2.0)
            c = 0.6 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
            d = 0.6 * math.sqrt(rng.uniform()) * cmath.exp(2j * math.pi * rng.uniform())
            s = math.sqrt(target)
            a, b = cmath.exp(2j * math.pi * rng.uniform()), cmath.exp(2j * math.pi * rng.uniform())
            z = (c + 0.5 * s * a, c - 0.5 * s * a)
            w = (d + 0.5 * s * b, d - 0.5 * s * b)
            raw = eval_bergman_raw(lam, z, w)
            ser = eval_bergman_series(lam, z, w)
            worst = max(worst, abs(raw - ser) / abs(ser))
        assert worst <= 1e-10

    @pytest.mark.parametrize("lam", [1, 2, 3, 5])
    def test_integer_series_is_exact(self, lam):
        u1, u2, v1, v2 = _pairs(100, 3, radius=0.8)
        z1, z2 = preimage_arrays(u1, u2)
        w1, w2 = preimage_arrays(v1, v2)
        raw = eval_bergman_raw(lam, (z1, z2), (w1, w2))
        ser = eval_bergman_series(lam, (z1, z2), (w1, w2))
        assert np.max(np.abs(raw - ser) / np.abs(raw)) <= 1e-13

    def test_integer_series_terms(self):
        # for lam = 3 the sum is binom(3,1) + binom(3,2) x + binom(3,3) x^2
        z, w = (0.3, -0.2), (0.1j, 0.4)
        D = (1 - z[0] * np.conj(w[0])) * (1 - z[1] * np.conj(w[1]))
        P = (1 - z[0] * np.conj(w[1])) * (1 - z[1] * np.conj(w[0]))
        x = (z[0] - z[1]) * np.conj(w[0] - w[1]) / D
        expected = (3 + 3 * x + x * x) / (2 * D * P ** 3)
        assert eval_bergman_series(3, z, w) == pytest.approx(expected, rel=1e-14)

    def test_mpmath_reference(self):
        # the two-term formula in 50-digit arithmetic, far from the diagonal
        lam = 2.3
        z, w = (0.4 + 0.1j, -0.5j), (-0.3, 0.6 + 0.2j)
        with mp.workdps(50):
            zz = [mp.mpc(c) for c in z]
            ww = [mp.mpc(c) for c in w]
            ref = ((1 - zz[0] * mp.conj(ww[0])) ** -lam * (1 - zz[1] * mp.conj(ww[1])) ** -lam
                   - (1 - zz[0] * mp.conj(ww[1])) ** -lam * (1 - zz[1] * mp.conj(ww[0])) ** -lam)
            ref = complex(ref / (2 * (zz[0] - zz[1]) * mp.conj(ww[0] - ww[1])))
        u, v = symmetrize(*z), symmetrize(*w)
        assert eval_kernel(WeightedBergman(lam), u, v) == pytest.approx(ref, rel=1e-13)

    def test_nonvanishing_on_grid(self):
        g = np.linspace(-0.9, 0.9, 20)
        z1, z2 = np.meshgrid(g, g)
        u1, u2 = (z1 + z2).ravel(), (z1 * z2).ravel()
        rng = np.random.default_rng(4)
        idx = rng.integers(0, u1.size, size=(2, 4000))
        for lam in (0.5, 2.5):
            K = eval_kernel_arrays(WeightedBergman(lam), u1[idx[0]], u2[idx[0]], u1[idx[1]], u2[idx[1]])
            assert np.min(np.abs(K)) > 0


class TestFamilies:
    @pytest.mark.parametrize(
        "spec",
        [
            WeightedBergman(0.8),
            WeightedBergman(3.0),
            SymmetricC(1.5),
            Power(WeightedBergman(1.5), 0.7),
            DetCurvature(2.0, 1.0),
            Product((WeightedBergman(1.0), SymmetricC(2.0))),
        ],
        ids=format_spec,
    )
    def test_hermitian_symmetry(self, spec):
        u1, u2, v1, v2 = _pairs(200 if not isinstance(spec, DetCurvature) else 40, 5)
        a = eval_kernel_arrays(spec, u1, u2, v1, v2)
        b = eval_kernel_arrays(spec, v1, v2, u1, u2)
        # Cauchy-Schwarz scale: |K(u,v)| can be small through cancellation
        du = eval_kernel_arrays(spec, u1, u2, u1, u2).real
        dv = eval_kernel_arrays(spec, v1, v2, v1, v2).real
        scale = np.maximum(np.abs(a), np.sqrt(np.abs(du * dv)))
        assert np.max(np.abs(a - np.conj(b)) / scale) <= 1e-12

    def test_matrix_kernel_hermitian(self):
        u1, u2, v1, v2 = _pairs(20, 6)
        a = eval_kernel_arrays(MatrixCurvature(2, 0), u1, u2, v1, v2)
        b = eval_kernel_arrays(MatrixCurvature(2, 0), v1, v2, u1, u2)
        assert np.max(np.abs(a - np.conj(np.swapaxes(b, -1, -2)))) <= 1e-10 * np.max(np.abs(a))

    def test_symmetric_examples(self):
        for lam in (0.5, 1, 3):
            assert eval_symmetric(lam, (0, 0), (0, 0)) == pytest.approx(1)
        assert eval_symmetric(1, (0.5, 0), (0.5, 0)) == pytest.approx(7 / 6)
        u = symmetrize(0.5, 0.5)
        assert eval_symmetric(1, u, u) == pytest.approx(16 / 9)

    def test_symmetric_order_independent(self):
        z, w = (0.3 + 0.1j, -0.5j), (0.2, 0.6)
        a = eval_symmetric(2.5, symmetrize(*z), symmetrize(*w))
        b = eval_symmetric(2.5, symmetrize(z[1], z[0]), symmetrize(w[1], w[0]))
        assert a == pytest.approx(b, rel=1e-14)

    def test_power_one_and_two(self):
        u1, u2, v1, v2 = _pairs(100, 7)
        base = eval_kernel_arrays(WeightedBergman(1.7), u1, u2, v1, v2)
        one = eval_kernel_arrays(Power(WeightedBergman(1.7), 1.0), u1, u2, v1, v2)
        two = eval_kernel_arrays(Power(WeightedBergman(1.7), 2.0), u1, u2, v1, v2)
        assert np.max(np.abs(one - base) / np.abs(base)) <= 1e-14
        assert np.max(np.abs(two - base ** 2) / np.abs(base) ** 2) <= 1e-13

    def test_fractional_powers_compose(self):
        u1, u2, v1, v2 = _pairs(200, 8, radius=0.95)
        h = eval_kernel_arrays(Power(WeightedBergman(2.2), 1.5), u1, u2, v1, v2)
        cube = eval_kernel_arrays(WeightedBergman(2.2), u1, u2, v1, v2) ** 3
        assert np.max(np.abs(h ** 2 - cube) / np.abs(cube)) <= 1e-12

    def test_half_power_at_origin(self):
        assert eval_power(WeightedBergman(2), 0.5, (0, 0), (0, 0)) == pytest.approx(1)

    def test_product_is_schur_product(self):
        u1, u2, v1, v2 = _pairs(50, 9)
        a = eval_kernel_arrays(Product((WeightedBergman(1), WeightedBergman(1))), u1, u2, v1, v2)
        b = eval_kernel_arrays(Power(WeightedBergman(1), 2), u1, u2, v1, v2)
        assert np.max(np.abs(a - b) / np.abs(b)) <= 1e-14

    def test_refused_powers(self):
        with pytest.raises(UnsupportedPowerError):
            eval_power(SymmetricC(1), 0.5, (0.1, 0), (0.2, 0))
        with pytest.raises(UnsupportedPowerError):
            eval_kernel(Power(DetCurvature(1), 0.5), (0.1, 0), (0.2, 0))
        assert eval_power(SymmetricC(1), 2, (0.5, 0), (0.5, 0)) == pytest.approx((7 / 6) ** 2)

    def test_detcurv_diagonal_at_origin(self):
        # B^(1)(0,0) = 1/2 and det of its curvature is 2
        assert eval_kernel(DetCurvature(1, 0), (0, 0), (0, 0)) == pytest.approx(2 / 16, rel=1e-10)

    @settings(max_examples=30, deadline=None)
    @given(
        st.floats(0.2, 4.0),
        st.floats(0, 0.9), st.floats(0, 2 * math.pi),
        st.floats(0, 0.9), st.floats(0, 2 * math.pi),
    )
    def test_bergman_hermitian_property(self, lam, r1, t1, r2, t2):
        u = symmetrize(r1 * cmath.exp(1j * t1), r2 * cmath.exp(1j * t2))
        v = symmetrize(0.3, -0.4j)
        a = eval_kernel(WeightedBergman(lam), u, v)
        b = eval_kernel(WeightedBergman(lam), v, u)
        assert abs(a - b.conjugate()) <= 1e-12 * abs(a)


def _H_quotient_mp(lam, x, dps=60):
    """The quotient definition of H along (x, 0) in multiprecision."""
    with mp.workdps(dps):
        lam = mp.mpf(lam)
        x = mp.mpf(x)
        ab = 1 - x * x
        c = mp.mpf(1)
        d = x * x
        B = (ab ** -lam - c ** -lam) / (2 * d)
        return (B * (c ** (lam + 1) + ab ** (lam + 1)) - lam) / d ** 2


def _fit_h(lam, p, n=12, ymax=1e-3):
    """Coefficient of y^(p-2) in H (ab)^2 (1+y)^lam along (x, 0) by interpolation."""
    with mp.workdps(80):
        ys = [mp.mpf(ymax) * (k + 1) / n for k in range(n)]
        rows, rhs = [], []
        for y in ys:
            x = mp.sqrt(y / (1 + y))
            ab = 1 - x * x
            H = _H_quotient_mp(lam, x, 80)
            rows.append([y ** k for k in range(n)])
            rhs.append(H * ab ** 2 * (1 + y) ** lam)
        coef = mp.lu_solve(mp.matrix(rows), mp.matrix(rhs))
        return float(coef[p - 2])


class TestH:
    def test_leading_coefficient(self):
        for lam in (1, 2, 3):
            lead = lam * (lam + 1) * (2 * lam + 1) / 12
            assert h_tilde(lam, 2) == pytest.approx(lead, rel=1e-14)
            assert antidiagonal_H_coefficient(lam, 1) == pytest.approx(lead, rel=1e-12)
        assert eval_H(1, (0, 0)) == pytest.approx(0.5)

    def test_lambda1_coefficients_vanish(self):
        for p in range(3, 9):
            assert h_coefficients(1, p).coefficient == 0.0

    def test_lambda1_closed_form(self):
        rng = np.random.default_rng(10)
        z1 = 0.9 * np.sqrt(rng.uniform(size=200)) * np.exp(2j * np.pi * rng.uniform(size=200))
        z2 = 0.9 * np.sqrt(rng.uniform(size=200)) * np.exp(2j * np.pi * rng.uniform(size=200))
        z2[:50] = z1[:50] + 1e-3 * np.exp(1j * np.arange(50))
        expected = 0.5 / ((1 - abs(z1) ** 2) * (1 - abs(z2) ** 2) * abs(1 - np.conj(z1) * z2) ** 2)
        assert np.max(np.abs(eval_H(1, (z1, z2)) / expected - 1)) <= 1e-12

    def test_antidiagonal_lambda1_limit(self):
        assert (2 * 6 + 4 * 1) / 32 == pytest.approx(antidiagonal_H_coefficient(1, 1))
        assert antidiagonal_H_series(1, 1e-4) == pytest.approx(0.5, rel=1e-12)

    @pytest.mark.parametrize("lam", [2.0, 2.5, 3.0])
    def test_antidiagonal_series_matches_eval(self, lam):
        for t in (0.05, 0.2, 0.4):
            assert antidiagonal_H_series(lam, t) == pytest.approx(eval_H(lam, (t, -t)), rel=1e-10)

    @pytest.mark.parametrize("lam,p", [(2.0, 3), (2.0, 4), (2.5, 3), (0.7, 3), (3.5, 5)])
    def test_h_against_interpolation_oracle(self, lam, p):
        fit = _fit_h(lam, p)
        got = h_coefficients(lam, p).coefficient
        assert got == pytest.approx(fit, rel=1e-6, abs=1e-12)

    def test_series_and_quotient_agree_at_switch(self):
        for lam in (1.5, 2.0, 4.0):
            z = (0.2 + 0.1j, 0.2 + 0.1j + 0.08)
            a = eval_H(lam, z, y_switch=1.0)
            b = eval_H(lam, z, y_switch=1e-6)
            assert a == pytest.approx(b, rel=1e-9)

    def test_audit_record(self):
        rec = h_coefficients(2.0, 3)
        assert rec.helper_values["leading_coefficient"] == pytest.approx(rec.helper_values["leading_from_sum"])
        with pytest.raises(DomainError):
            h_coefficients(2.0, 2)
