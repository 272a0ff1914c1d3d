"""Enumerative code: brute-force ranking oracles, round trips, length laws."""

import math
from itertools import combinations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from mpmath import mp

from demonlab import (
    Codeword,
    CorruptCodewordError,
    RecordTape,
    ValidationError,
    asymptotic_k,
    ceil_log2,
    codeword_length,
    coding_bound_check,
    enumerative_decode,
    enumerative_encode,
    k_estimate,
    pack_codeword,
    tape_from_rank,
    tape_rank,
    unpack_codeword,
)


def all_weight_k_strings(n, k):
    """Every length-n string with k ones, in lexicographic order, 1 < 0."""
    out = []
    for ones in combinations(range(n), k):
        bits = [0] * n
        for i in ones:
            bits[i] = 1
        out.append(tuple(bits))
    # order with bit 1 sorting before bit 0: flip and sort ascending
    out.sort(key=lambda bits: tuple(1 - b for b in bits))
    return out


def binary_entropy_oracle(p, dps=50):
    mp.dps = dps
    p = mp.mpf(p)
    return float(-(p * mp.log(p, 2) + (1 - p) * mp.log(1 - p, 2)))


class TestRanking:
    @pytest.mark.parametrize("n", range(1, 9))
    def test_rank_matches_brute_force_order(self, n):
        for k in range(n + 1):
            strings = all_weight_k_strings(n, k)
            for expected_rank, bits in enumerate(strings):
                tape = RecordTape.from_bits(bits)
                assert tape_rank(tape) == expected_rank
                assert tape_from_rank(n, k, expected_rank).bits == tape.bits

    def test_rank_is_bijective_n4_k1(self):
        ranks = {tape_rank(RecordTape.from_bits(b))
                 for b in ([1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1])}
        assert ranks == {0, 1, 2, 3}

    def test_unrank_rejects_out_of_range(self):
        with pytest.raises(CorruptCodewordError):
            tape_from_rank(4, 1, 4)
        with pytest.raises(CorruptCodewordError):
            tape_from_rank(4, 5, 0)


class TestEncodeDecode:
    def test_all_zero_payload_length(self):
        code = enumerative_encode(RecordTape.from_bits([0, 0, 0, 0]))
        assert len(code.payload) == 3  # ceil(lg 5) + 0

    def test_all_one_payload_length(self):
        code = enumerative_encode(RecordTape.from_bits([1, 1, 1, 1]))
        assert len(code.payload) == 3

    def test_weight_one_strings(self):
        codes = [enumerative_encode(RecordTape.from_bits(b))
                 for b in ([1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 1, 0], [0, 0, 0, 1])]
        assert all(len(c.payload) == 5 for c in codes)  # 3 + ceil(lg 4)
        assert len({bytes(c.payload) for c in codes}) == 4

    def test_empty_tape(self):
        code = enumerative_encode(RecordTape.from_bits([]))
        assert len(code.payload) == 0
        assert enumerative_decode(code).bits == b""

    @pytest.mark.parametrize("n", range(0, 11))
    def test_round_trip_exhaustive(self, n):
        for value in range(2 ** n):
            bits = [(value >> i) & 1 for i in range(n)]
            tape = RecordTape.from_bits(bits)
            code = enumerative_encode(tape)
            assert len(code.payload) == codeword_length(tape.n, tape.k)
            assert enumerative_decode(code).bits == tape.bits

    @pytest.mark.parametrize("n,p", [(1000, 0.5), (1000, 1 / 16),
                                     (100_000, 0.25)])
    def test_round_trip_large_random(self, n, p):
        rng = np.random.default_rng(n)
        tape = RecordTape.random(n, p, rng)
        back = enumerative_decode(enumerative_encode(tape))
        assert back.bits == tape.bits

    def test_decode_rejects_rank_at_count(self):
        # N=4, k=1: rank field must stay below C(4,1)=4
        payload = bytes([0, 0, 1]) + bytes([1, 0])  # k=1, rank=2 -> ok
        assert enumerative_decode(Codeword(payload, 4)).bits == bytes([0, 0, 1, 0])
        bad = bytes([0, 0, 1]) + bytes([1, 1])  # rank=3 ok; 4 unencodable
        assert enumerative_decode(Codeword(bad, 4)).k == 1
        with pytest.raises(CorruptCodewordError):
            # k=2 declared but rank field of C(4,2)=6 needs value < 6
            enumerative_decode(Codeword(bytes([0, 1, 0]) + bytes([1, 1, 0]), 4))

    def test_decode_rejects_wrong_length(self):
        with pytest.raises(CorruptCodewordError):
            enumerative_decode(Codeword(bytes([0, 0, 1, 1]), 4))

    def test_decode_rejects_overweight_count(self):
        with pytest.raises(CorruptCodewordError):
            enumerative_decode(Codeword(bytes([1, 0, 1]), 4))  # k=5 > 4

    @given(st.integers(min_value=0, max_value=2 ** 60 - 1),
           st.integers(min_value=1, max_value=60))
    @settings(max_examples=300, deadline=None)
    def test_round_trip_random_words(self, value, n):
        bits = [(value >> i) & 1 for i in range(n)]
        tape = RecordTape.from_bits(bits)
        assert enumerative_decode(enumerative_encode(tape)).bits == tape.bits


class TestLengthLaw:
    def test_exact_length_formula(self):
        rng = np.random.default_rng(7)
        for _ in range(200):
            n = int(rng.integers(1, 400))
            p = rng.random()
            tape = RecordTape.random(n, p, rng)
            code = enumerative_encode(tape)
            expected = ceil_log2(n + 1) + (
                ceil_log2(math.comb(n, tape.k)) if math.comb(n, tape.k) > 1 else 0)
            assert len(code.payload) == expected
            assert k_estimate(tape) == expected

    def test_k_estimate_examples(self):
        # independent big-integer oracle for the worked example
        assert ceil_log2(101) == 7
        assert math.ceil(math.log2(math.comb(100, 50))) == 97
        tape = RecordTape.from_bits([1] * 50 + [0] * 50)
        assert k_estimate(tape) == 104
        assert k_estimate(RecordTape.from_bits([0] * 100)) == 7

    def test_k_estimate_typical_sparse_tape(self):
        # N=1000, k=62: the estimate sits between the entropy rate at
        # ell/L = 1/16 and that rate plus the lg(N+1)+2 header slack
        bits = [0] * 1000
        for i in range(62):
            bits[i * 16] = 1
        estimate = k_estimate(RecordTape.from_bits(bits))
        rate = 1000 * binary_entropy_oracle(1 / 16)
        assert rate == pytest.approx(337.2900666, abs=1e-6)
        assert rate <= estimate <= rate + math.log2(1001) + 2

    def test_monotone_in_binomial(self):
        lengths = [codeword_length(100, k) for k in range(51)]
        assert lengths == sorted(lengths)

    def test_entropy_sandwich_exact(self):
        # N h(k/N) - lg(N+1) <= lg C(N,k) <= N h(k/N), via exact big ints
        mp.dps = 60
        rng = np.random.default_rng(9)
        for _ in range(40):
            n = int(rng.integers(2, 3000))
            k = int(rng.integers(1, n))
            lg_c = float(mp.log(mp.mpf(math.comb(n, k)), 2))
            nh = n * binary_entropy_oracle(k / n)
            assert lg_c <= nh + 1e-6
            assert nh <= lg_c + math.log2(n + 1) + 2


class TestPrefixFreeness:
    def test_exhaustive_n8(self):
        payloads = sorted(
            str(enumerative_encode(RecordTape.from_bits(
                [(v >> i) & 1 for i in range(8)])).payload)
            for v in range(256))
        for a, b in zip(payloads, payloads[1:]):
            assert not (len(a) < len(b) and b.startswith(a)), (a, b)
        assert len(set(payloads)) == 256

    def test_concatenation_injective_n6(self):
        # decode a stream of two codewords: split is unambiguous
        codes = {}
        for v in range(64):
            bits = tuple((v >> i) & 1 for i in range(6))
            codes[bits] = enumerative_encode(RecordTape.from_bits(bits)).payload
        seen = {}
        for b1, c1 in codes.items():
            for b2, c2 in codes.items():
                stream = bytes(c1) + bytes(c2)
                assert seen.setdefault(stream, (b1, b2)) == (b1, b2)


class TestAsymptoticRate:
    def test_half(self):
        assert asymptotic_k(100, 0.5) == pytest.approx(100.0, abs=1e-12)

    def test_sixteenth(self):
        assert asymptotic_k(1000, 1 / 16) == \
            pytest.approx(1000 * binary_entropy_oracle(1 / 16), abs=1e-9)
        assert asymptotic_k(1000, 1 / 16) == pytest.approx(337.290, abs=1e-3)

    @pytest.mark.parametrize("bad", [0.0, 1.0, -0.2, 1.5])
    def test_rejects_degenerate_density(self, bad):
        with pytest.raises(ValidationError):
            asymptotic_k(100, bad)


class TestCodingBound:
    def test_szilard_record(self):
        assert coding_bound_check(1.0, 1.0)

    def test_violation(self):
        assert not coding_bound_check(0.811278, 0.5)

    def test_rejects_negative_entropy(self):
        with pytest.raises(ValidationError):
            coding_bound_check(-0.1, 1.0)

    def test_one_bit_record_obeys_both_bounds(self):
        # the per-cycle one-bit register: h(p) <= 1 < h(p) + 1 for any p
        for p in (0.1, 0.25, 0.5, 0.9):
            delta_h = binary_entropy_oracle(p)
            assert coding_bound_check(delta_h, 1.0)
            assert 1.0 < delta_h + 1.0

    def test_monte_carlo_record_lengths(self):
        # mean compressed length over random tapes beats neither the
        # entropy rate nor exceeds it by more than the header slack
        rng = np.random.default_rng(15)
        n, p = 256, 0.25
        lengths = [k_estimate(RecordTape.random(n, p, rng))
                   for _ in range(1000)]
        mean_len = float(np.mean(lengths))
        delta_h = n * binary_entropy_oracle(p)
        assert coding_bound_check(delta_h, mean_len)
        assert mean_len <= delta_h + math.log2(n + 1) + 2


class TestSerialization:
    def test_round_trip(self):
        rng = np.random.default_rng(21)
        for _ in range(50):
            n = int(rng.integers(0, 300))
            tape = RecordTape.random(n, rng.random(), rng) if n else \
                RecordTape.from_bits([])
            code = enumerative_encode(tape)
            blob = pack_codeword(code)
            assert blob[:8] == n.to_bytes(8, "little")
            back = unpack_codeword(blob)
            assert back == code
            assert enumerative_decode(back).bits == tape.bits

    def test_rejects_truncation(self):
        blob = pack_codeword(enumerative_encode(
            RecordTape.from_bits([1, 0, 1, 1, 0, 0, 1, 0, 1])))
        with pytest.raises(CorruptCodewordError):
            unpack_codeword(blob[:-1])

    def test_rejects_nonzero_padding(self):
        code = enumerative_encode(RecordTape.from_bits([1, 0, 0, 0]))
        blob = bytearray(pack_codeword(code))
        blob[-1] |= 0x01  # flip a padding bit
        with pytest.raises(CorruptCodewordError):
            unpack_codeword(bytes(blob))

    def test_rejects_missing_header(self):
        with pytest.raises(CorruptCodewordError):
            unpack_codeword(b"\x01\x02")


class TestRecordTape:
    def test_counts(self):
        tape = RecordTape.from_bits([1, 0, 1, 1])
        assert (tape.n, tape.k) == (4, 3)

    def test_rejects_non_binary(self):
        with pytest.raises(ValidationError):
            RecordTape(bytes([0, 2]))

    def test_from_array(self):
        arr = np.array([True, False, True])
        assert RecordTape.from_array(arr).bits == bytes([1, 0, 1])
