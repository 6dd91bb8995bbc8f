"""Frame assembly: RS encoding, header byte, scrambling, preamble prefix.

On air a frame is ``preamble(4) | scramble(header(1) | codeword(255))``,
260 bytes, sent back to back. The scrambler word restarts at the header
byte of every frame.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .galois_fec import K, N, rs_encode, rs_encode_batch
from .sequences import PREAMBLE_WORD, SCRAMBLER_WORD

PREAMBLE_BYTES = 4
HEADER_BYTES = 1
FRAME_BYTES = PREAMBLE_BYTES + HEADER_BYTES + N
FRAME_BITS = 8 * FRAME_BYTES
SCRAMBLED_BYTES = HEADER_BYTES + N
PAYLOAD_BYTES = K
CHANNEL_BIT_RATE = 875e6

_SCRAMBLE_MASK = np.frombuffer(SCRAMBLER_WORD * (SCRAMBLED_BYTES // 4), dtype=np.uint8)


@dataclass(frozen=True)
class Frame:
    """A frame at rest: preamble, header and codeword before scrambling."""

    preamble: bytes
    header: int
    codeword: bytes

    def on_air(self) -> bytes:
        return self.preamble + scramble(bytes([self.header]) + self.codeword)


@dataclass(frozen=True)
class RateLedger:
    channel_bit_rate: float
    information_bit_rate: float
    frame_efficiency: float


def scramble(block: bytes, scrambler_word: bytes = SCRAMBLER_WORD) -> bytes:
    """XOR ``block`` with the repeated 4-byte scrambler word. Self-inverse."""
    if len(block) % 4:
        raise ValueError(f"scrambled block length must be a multiple of 4, got {len(block)}")
    mask = np.frombuffer(scrambler_word * (len(block) // 4), dtype=np.uint8)
    return (np.frombuffer(block, dtype=np.uint8) ^ mask).tobytes()


descramble = scramble


def build_frame(payload: bytes, header: int) -> Frame:
    if len(payload) != PAYLOAD_BYTES:
        raise ValueError(f"payload must be {PAYLOAD_BYTES} bytes, got {len(payload)}")
    return Frame(PREAMBLE_WORD, header & 0xFF, rs_encode(payload))


def parse_frame(on_air: bytes) -> tuple[int, bytes]:
    """Inverse of :meth:`Frame.on_air`: returns ``(header, codeword)``."""
    if len(on_air) != FRAME_BYTES:
        raise ValueError(f"frame must be {FRAME_BYTES} bytes, got {len(on_air)}")
    body = descramble(on_air[PREAMBLE_BYTES:])
    return body[0], body[1:]


def build_frames_batch(payloads: np.ndarray, headers: np.ndarray) -> np.ndarray:
    """Vectorised :func:`build_frame`: ``(n, 239)`` payloads to ``(n, 260)`` on-air bytes."""
    payloads = np.asarray(payloads, dtype=np.uint8)
    headers = np.asarray(headers).astype(np.uint8)
    n = payloads.shape[0]
    body = np.empty((n, SCRAMBLED_BYTES), dtype=np.uint8)
    body[:, 0] = headers
    body[:, 1:] = rs_encode_batch(payloads)
    out = np.empty((n, FRAME_BYTES), dtype=np.uint8)
    out[:, :PREAMBLE_BYTES] = np.frombuffer(PREAMBLE_WORD, dtype=np.uint8)
    out[:, PREAMBLE_BYTES:] = body ^ _SCRAMBLE_MASK
    return out


def serialize_stream(frames) -> np.ndarray:
    """Concatenate frames into an MSB-first bit array (uint8 of 0/1)."""
    frames = list(frames)
    if not frames:
        return np.zeros(0, dtype=np.uint8)
    raw = b"".join(f.on_air() if isinstance(f, Frame) else bytes(f) for f in frames)
    return np.unpackbits(np.frombuffer(raw, dtype=np.uint8))


def compute_rate_ledger(channel_bit_rate: float = CHANNEL_BIT_RATE) -> RateLedger:
    if not channel_bit_rate > 0:
        raise ValueError("channel bit rate must be positive")
    eff = PAYLOAD_BYTES / FRAME_BYTES
    return RateLedger(channel_bit_rate, channel_bit_rate * eff, eff)
