import pytest

from e2vault import gf256


def oracle_mul(a: int, b: int) -> int:
    """Naive carry-less multiply-and-reduce, written independently of the
    table-based implementation."""
    product = 0
    for bit in range(8):
        if (b >> bit) & 1:
            product ^= a << bit
    for bit in range(15, 7, -1):
        if (product >> bit) & 1:
            product ^= 0x11B << (bit - 8)
    return product


class TestFieldAgainstOracle:
    def test_mul_exhaustive(self):
        for a in range(256):
            for b in range(256):
                assert gf256.gf_mul(a, b) == oracle_mul(a, b)

    def test_all_inverses(self):
        for a in range(1, 256):
            inv = gf256.gf_inv(a)
            assert oracle_mul(a, inv) == 1

    def test_inverse_of_zero(self):
        with pytest.raises(ZeroDivisionError):
            gf256.gf_inv(0)

    def test_div_by_zero(self):
        with pytest.raises(ZeroDivisionError):
            gf256.gf_div(5, 0)

    def test_distributivity_exhaustive_pairs(self):
        # all 256x256 (a, b) pairs, with a derived third operand
        for a in range(256):
            for b in range(256):
                c = a ^ (b * 167 + 13) % 256
                assert gf256.gf_mul(a, b ^ c) == gf256.gf_mul(a, b) ^ gf256.gf_mul(a, c)


class TestPolynomials:
    def test_eval_constant(self):
        assert gf256.gf_poly_eval([0x42], 17) == 0x42

    def test_eval_matches_oracle(self):
        coeffs = [3, 141, 22, 250]
        for x in range(1, 256):
            expected = 0
            xp = 1
            for c in coeffs:
                expected ^= oracle_mul(c, xp)
                xp = oracle_mul(xp, x)
            assert gf256.gf_poly_eval(coeffs, x) == expected

    def test_interpolation_recovers_constant_term(self):
        coeffs = [99, 7, 200]
        points = [(x, gf256.gf_poly_eval(coeffs, x)) for x in (1, 5, 9)]
        assert gf256.gf_interpolate_at_zero(points) == 99
