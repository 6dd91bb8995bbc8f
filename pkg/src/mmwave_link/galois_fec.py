"""GF(2^8) arithmetic and the systematic RS(255,239) code.

Field polynomial x^8+x^4+x^3+x^2+1 (0x11D), primitive element 0x02,
generator roots alpha^0 .. alpha^15. Decoding is errors-only:
Berlekamp-Massey, exhaustive root search, Forney magnitudes.

Single-codeword functions work on ``bytes``; the ``*_batch`` variants take
``(n, k)`` uint8 arrays and are what the link pipeline uses.
"""
from __future__ import annotations

import numpy as np

PRIM_POLY = 0x11D
N = 255
K = 239
NPAR = N - K
T = NPAR // 2


class DecodeFailure(ValueError):
    """Raised when a received word has more errors than the code can correct."""


def _build_tables():
    exp = np.zeros(2 * N, dtype=np.int32)
    log = np.zeros(256, dtype=np.int32)
    x = 1
    for i in range(N):
        exp[i] = x
        log[x] = i
        x <<= 1
        if x & 0x100:
            x ^= PRIM_POLY
    exp[N:] = exp[:N]
    exp.flags.writeable = False
    log.flags.writeable = False
    return exp, log


GF_EXP, GF_LOG = _build_tables()
_EXP = GF_EXP.tolist()
_LOG = GF_LOG.tolist()


def gf_mul(a: int, b: int) -> int:
    if a == 0 or b == 0:
        return 0
    return _EXP[_LOG[a] + _LOG[b]]


def gf_inv(a: int) -> int:
    if a == 0:
        raise ZeroDivisionError("0 has no inverse in GF(256)")
    return _EXP[N - _LOG[a]]


def gf_div(a: int, b: int) -> int:
    if b == 0:
        raise ZeroDivisionError("division by zero in GF(256)")
    if a == 0:
        return 0
    return _EXP[(_LOG[a] - _LOG[b]) % N]


def gf_pow(a: int, n: int) -> int:
    if a == 0:
        return 0 if n else 1
    return _EXP[(_LOG[a] * n) % N]


def _gf_mul_vec(a: np.ndarray, log_b: int) -> np.ndarray:
    """Multiply an integer array by the constant alpha**log_b."""
    out = GF_EXP[GF_LOG[a] + log_b]
    return np.where(a == 0, 0, out)


def _generator_poly() -> list[int]:
    # highest-degree coefficient first
    g = [1]
    for i in range(NPAR):
        root = _EXP[i]
        nxt = g + [0]
        for j in range(len(g)):
            nxt[j + 1] ^= gf_mul(g[j], root)
        g = nxt
    return g


GENERATOR = tuple(_generator_poly())
_GEN_LOG = np.array([_LOG[c] for c in GENERATOR[1:]], dtype=np.int32)


def rs_encode(data: bytes) -> bytes:
    """Systematic encode of 239 data bytes into a 255-byte codeword."""
    if len(data) != K:
        raise ValueError(f"RS encoder needs {K} data bytes, got {len(data)}")
    return rs_encode_batch(np.frombuffer(bytes(data), dtype=np.uint8)[None, :])[0].tobytes()


def rs_encode_batch(data: np.ndarray) -> np.ndarray:
    """Encode an ``(n, 239)`` uint8 array into ``(n, 255)`` codewords."""
    data = np.asarray(data, dtype=np.uint8)
    if data.ndim != 2 or data.shape[1] != K:
        raise ValueError(f"expected shape (n, {K}), got {data.shape}")
    reg = np.zeros((data.shape[0], NPAR), dtype=np.int32)
    d = data.astype(np.int32)
    for i in range(K):
        fb = d[:, i] ^ reg[:, 0]
        reg[:, :-1] = reg[:, 1:]
        reg[:, -1] = 0
        nz = fb != 0
        if nz.any():
            prod = GF_EXP[GF_LOG[fb[nz]][:, None] + _GEN_LOG[None, :]]
            reg[nz] ^= prod
    return np.concatenate([data, reg.astype(np.uint8)], axis=1)


def syndromes_batch(received: np.ndarray) -> np.ndarray:
    """Syndromes S_j = r(alpha^j), j = 0..15, for each row of an ``(n, 255)`` array."""
    r = np.asarray(received, dtype=np.int32)
    if r.ndim != 2 or r.shape[1] != N:
        raise ValueError(f"expected shape (n, {N}), got {r.shape}")
    s = np.zeros((r.shape[0], NPAR), dtype=np.int32)
    roots_log = np.arange(NPAR, dtype=np.int32)
    for i in range(N):
        # Horner step: S <- S * alpha^j + r_i
        s = np.where(s == 0, 0, GF_EXP[GF_LOG[s] + roots_log[None, :]]) ^ r[:, i:i + 1]
    return s


def syndromes(received: bytes) -> list[int]:
    return syndromes_batch(np.frombuffer(bytes(received), dtype=np.uint8)[None, :])[0].tolist()


def _berlekamp_massey(synd: list[int]) -> list[int]:
    """Error locator polynomial, lowest degree first, Lambda[0] == 1."""
    C = [1] + [0] * NPAR
    B = [1] + [0] * NPAR
    L, m, b = 0, 1, 1
    for n in range(NPAR):
        d = synd[n]
        for i in range(1, L + 1):
            d ^= gf_mul(C[i], synd[n - i])
        if d == 0:
            m += 1
            continue
        coef = gf_div(d, b)
        if 2 * L <= n:
            prev = C[:]
            for i in range(NPAR + 1 - m):
                C[i + m] ^= gf_mul(coef, B[i])
            L = n + 1 - L
            B, b, m = prev, d, 1
        else:
            for i in range(NPAR + 1 - m):
                C[i + m] ^= gf_mul(coef, B[i])
            m += 1
    return C[:L + 1]


def _poly_eval(poly: list[int], x: int) -> int:
    # poly lowest degree first
    y = 0
    for c in reversed(poly):
        y = gf_mul(y, x) ^ c
    return y


def _error_positions(locator: list[int]) -> list[int]:
    """Codeword indices i whose locator X = alpha^(254-i) has Lambda(X^-1) == 0."""
    # Lambda(alpha^-(254-i)) for all i at once
    exps = (-(N - 1 - np.arange(N))) % N
    acc = np.zeros(N, dtype=np.int32)
    for deg, c in enumerate(locator):
        if c:
            acc ^= GF_EXP[(_LOG[c] + deg * exps) % N]
    return np.flatnonzero(acc == 0).tolist()


def _correct(received: np.ndarray, synd: list[int]) -> tuple[np.ndarray, int]:
    locator = _berlekamp_massey(synd)
    n_err = len(locator) - 1
    if n_err > T:
        raise DecodeFailure(f"locator degree {n_err} exceeds t={T}")
    positions = _error_positions(locator)
    if len(positions) != n_err:
        raise DecodeFailure("locator roots do not match its degree")
    # Omega = S(x) * Lambda(x) mod x^16
    omega = [0] * NPAR
    for i, s in enumerate(synd):
        if s:
            for j, c in enumerate(locator):
                if i + j < NPAR:
                    omega[i + j] ^= gf_mul(s, c)
    deriv = [locator[i] if i % 2 == 1 else 0 for i in range(1, len(locator))]
    out = received.copy()
    for pos in positions:
        x = _EXP[N - 1 - pos]
        x_inv = gf_inv(x)
        den = _poly_eval(deriv, x_inv)
        if den == 0:
            raise DecodeFailure("zero derivative at error locator root")
        out[pos] ^= gf_mul(x, gf_div(_poly_eval(omega, x_inv), den))
    if syndromes_batch(out[None, :])[0].any():
        raise DecodeFailure("corrected word is not a codeword")
    return out, n_err


def rs_decode(received: bytes) -> tuple[bytes, int]:
    """Decode a 255-byte word.

    Returns ``(data, corrected_count)``; raises :class:`DecodeFailure` when
    the word is further than 8 symbols from any codeword (or the decoder
    cannot prove otherwise).
    """
    if len(received) != N:
        raise ValueError(f"RS decoder needs {N} bytes, got {len(received)}")
    r = np.frombuffer(bytes(received), dtype=np.uint8).copy()
    synd = syndromes_batch(r[None, :])[0].tolist()
    if not any(synd):
        return r[:K].tobytes(), 0
    fixed, count = _correct(r, synd)
    return fixed[:K].tobytes(), count


def rs_decode_batch(received: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Decode ``(n, 255)`` words.

    Returns ``(data, counts)`` where ``data`` is ``(n, 239)`` and ``counts``
    holds the number of corrected symbols per row, or -1 on decode failure.
    Failed rows carry their uncorrected systematic bytes.
    """
    r = np.array(received, dtype=np.uint8, copy=True)
    synd = syndromes_batch(r)
    counts = np.zeros(r.shape[0], dtype=np.int64)
    for row in np.flatnonzero(synd.any(axis=1)):
        try:
            r[row], counts[row] = _correct(r[row], synd[row].tolist())
        except DecodeFailure:
            counts[row] = -1
    return r[:, :K], counts
