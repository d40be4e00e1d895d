import secrets

from e2vault import crypto, eddsa


class TestCurveBridge:
    def test_base_point_maps_to_u_9(self):
        # The Edwards base point corresponds to Montgomery u = 9.
        enc = eddsa.public_edwards_from_scalar(crypto.clamp_scalar(b"\x01" * 32))
        # round-trip sanity on the mapping itself
        u9 = (9).to_bytes(32, "little")
        y = eddsa.montgomery_to_edwards(u9)
        assert y is not None
        assert eddsa.edwards_to_montgomery(y) == u9
        assert enc is not None

    def test_edwards_public_matches_x25519_backend(self):
        # For random scalars, converting our Edwards public key back to
        # Montgomery must reproduce the backend's X25519 public key.
        for _ in range(20):
            kp = crypto.generate_keypair()
            ed_pub = eddsa.public_edwards_from_scalar(kp.secret_scalar)
            assert eddsa.edwards_to_montgomery(ed_pub) == kp.public_point

    def test_montgomery_to_edwards_consistent_with_signer(self):
        # The verifier-side mapping (public u -> Edwards, sign 0) must agree
        # with the signer-side derivation for every keypair.
        for _ in range(20):
            kp = crypto.generate_keypair()
            assert eddsa.montgomery_to_edwards(kp.public_point) == eddsa.public_edwards_from_scalar(
                kp.secret_scalar
            )

    def test_invalid_u_rejected(self):
        assert eddsa.montgomery_to_edwards((eddsa.P - 1).to_bytes(32, "little")) is None


class TestSignVerify:
    def test_round_trip(self):
        kp = crypto.generate_keypair()
        sig = eddsa.sign(kp.secret_scalar, b"hello")
        assert len(sig) == 64
        assert eddsa.verify(kp.public_point, b"hello", sig)

    def test_deterministic_signatures(self):
        kp = crypto.generate_keypair()
        assert eddsa.sign(kp.secret_scalar, b"m") == eddsa.sign(kp.secret_scalar, b"m")

    def test_wrong_key_rejected(self):
        kp = crypto.generate_keypair()
        other = crypto.generate_keypair()
        sig = eddsa.sign(kp.secret_scalar, b"msg")
        assert not eddsa.verify(other.public_point, b"msg", sig)

    def test_tampered_message_rejected(self):
        kp = crypto.generate_keypair()
        sig = eddsa.sign(kp.secret_scalar, b"msg")
        assert not eddsa.verify(kp.public_point, b"msh", sig)

    def test_tampered_signature_rejected(self):
        kp = crypto.generate_keypair()
        sig = bytearray(eddsa.sign(kp.secret_scalar, b"msg"))
        for pos in (0, 31, 32, 63):
            bad = bytearray(sig)
            bad[pos] ^= 0x40
            assert not eddsa.verify(kp.public_point, b"msg", bytes(bad))

    def test_high_s_rejected(self):
        kp = crypto.generate_keypair()
        sig = eddsa.sign(kp.secret_scalar, b"msg")
        s = int.from_bytes(sig[32:], "little")
        forged = sig[:32] + (s + eddsa.GROUP_ORDER).to_bytes(32, "little")
        assert not eddsa.verify(kp.public_point, b"msg", forged)

    def test_bad_length_rejected(self):
        kp = crypto.generate_keypair()
        assert not eddsa.verify(kp.public_point, b"msg", b"\x00" * 63)

    def test_many_keypairs(self):
        for _ in range(10):
            kp = crypto.generate_keypair()
            msg = secrets.token_bytes(40)
            assert eddsa.verify(kp.public_point, msg, eddsa.sign(kp.secret_scalar, msg))
