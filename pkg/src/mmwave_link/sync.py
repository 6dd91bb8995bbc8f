"""Preamble detection, byte alignment and frame extraction on the received bit stream.

A correlator bank sees 39 bits (a 32-bit preamble plus 7 bits of slack) and
scores the eight 1-bit shifts k = 0..7. Lock needs a second bank, one frame
(2080 bits) later, to fire on the same k. Scores are bipolar: 2 * matches - 32.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .framing import FRAME_BITS, PREAMBLE_BYTES, SCRAMBLED_BYTES, _SCRAMBLE_MASK
from .sequences import PREAMBLE_BITS

PREAMBLE_LEN = 32
BANK_WIDTH = PREAMBLE_LEN + 7
DEFAULT_THRESHOLD = 28
MAX_MISSES = 3
_SEARCH_CHUNK = 1 << 16


@dataclass
class SyncState:
    status: str = "searching"          # "searching" or "locked"
    alignment_k: int = -1
    frame_start_bit: int = -1
    threshold: int = DEFAULT_THRESHOLD
    scores: tuple[int, int] = (0, 0)

    @property
    def locked(self) -> bool:
        return self.status == "locked"


@dataclass
class FrameRecord:
    start_bit: int
    header: int
    codeword: bytes
    preamble_score: int


@dataclass
class TrackResult:
    starts: np.ndarray
    locks: list[SyncState] = field(default_factory=list)


def _bipolar(bits) -> np.ndarray:
    return 1 - 2 * np.asarray(bits, dtype=np.int8)


_PRE_BIPOLAR = _bipolar(PREAMBLE_BITS)


def correlate_bank(window, preamble=PREAMBLE_BITS) -> np.ndarray:
    """Eight bipolar scores of ``preamble`` against ``window[k:k+32]``."""
    window = np.asarray(window)
    if window.shape != (BANK_WIDTH,):
        raise ValueError(f"bank window must be {BANK_WIDTH} bits, got {window.shape}")
    return np.correlate(_bipolar(window).astype(np.int32), _bipolar(preamble).astype(np.int32), "valid")


def preamble_scores(bits: np.ndarray, start: int = 0, stop: int | None = None) -> np.ndarray:
    """Scores for candidate preamble starts ``start .. stop-1`` (clipped to the stream)."""
    last = len(bits) - PREAMBLE_LEN + 1
    stop = last if stop is None else min(stop, last)
    if stop <= start:
        return np.zeros(0, dtype=np.int32)
    seg = _bipolar(bits[start:stop + PREAMBLE_LEN - 1]).astype(np.int32)
    return np.correlate(seg, _PRE_BIPOLAR.astype(np.int32), "valid")


def scores_at(bits: np.ndarray, starts: np.ndarray) -> np.ndarray:
    idx = np.asarray(starts)[:, None] + np.arange(PREAMBLE_LEN)
    return _bipolar(bits[idx]).astype(np.int32) @ _PRE_BIPOLAR.astype(np.int32)


def detect_preamble(stream, threshold: int = DEFAULT_THRESHOLD, start: int = 0) -> SyncState:
    """Scan ``stream`` from bit ``start`` until two banks one frame apart agree.

    Bank positions sit on the receiver's byte grid (multiples of 8 bits from
    the stream origin), so the winning shift k is the byte alignment.
    Returns an unlocked state if the stream runs out first.
    """
    if not 0 < threshold <= PREAMBLE_LEN:
        raise ValueError("threshold must be in (0, 32]")
    bits = np.asarray(stream, dtype=np.uint8)
    pos = start
    n = len(bits)
    while pos + FRAME_BITS + PREAMBLE_LEN <= n:
        stop = min(pos + _SEARCH_CHUNK, n - FRAME_BITS - PREAMBLE_LEN + 1)
        a = preamble_scores(bits, pos, stop)
        b = preamble_scores(bits, pos + FRAME_BITS, stop + FRAME_BITS)
        m = min(len(a), len(b))
        hit = (a[:m] >= threshold) & (b[:m] >= threshold)
        cand = np.flatnonzero(hit)
        if cand.size:
            first = int(cand[0])
            byte0 = first - (first + pos) % 8
            lo, hi = max(byte0, 0), min(byte0 + 8, m)
            pick = lo + int(np.argmax(np.where(hit[lo:hi], a[lo:hi] + b[lo:hi], -999)))
            at = pos + pick
            return SyncState("locked", at % 8, at, threshold, (int(a[pick]), int(b[pick])))
        pos = stop
    return SyncState(threshold=threshold)


def track_frames(bits, threshold: int = DEFAULT_THRESHOLD, max_misses: int = MAX_MISSES) -> TrackResult:
    """Lock, free-run frame by frame, drop lock after ``max_misses`` bad preambles, re-search.

    Frames counted during a run of misses that ends in loss of lock are
    discarded; the search resumes just after the last good preamble.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    starts: list[np.ndarray] = []
    locks: list[SyncState] = []
    pos = 0
    while True:
        state = detect_preamble(bits, threshold, pos)
        if not state.locked:
            break
        locks.append(state)
        cand = np.arange(state.frame_start_bit, len(bits) - FRAME_BITS + 1, FRAME_BITS)
        ok = scores_at(bits, cand) >= threshold
        bad = ~ok
        run = np.convolve(bad.astype(np.int64), np.ones(max_misses, dtype=np.int64), "valid")
        drops = np.flatnonzero(run == max_misses)
        if drops.size == 0:
            starts.append(cand)
            break
        first_bad = int(drops[0])
        starts.append(cand[:first_bad])
        pos = int(cand[first_bad - 1]) + 1 if first_bad else state.frame_start_bit + 1
    all_starts = np.concatenate(starts) if starts else np.zeros(0, dtype=np.int64)
    return TrackResult(all_starts.astype(np.int64), locks)


def extract_frames(bits, starts) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Descramble frames at the given start offsets.

    Returns ``(headers, codewords, preamble_scores)`` with codewords shaped
    ``(n, 255)``. Starts without a full frame behind them must be filtered
    out by the caller.
    """
    bits = np.asarray(bits, dtype=np.uint8)
    starts = np.asarray(starts, dtype=np.int64)
    if starts.size == 0:
        return np.zeros(0, np.uint8), np.zeros((0, SCRAMBLED_BYTES - 1), np.uint8), np.zeros(0, np.int32)
    idx = starts[:, None] + 8 * PREAMBLE_BYTES + np.arange(8 * SCRAMBLED_BYTES)
    body = np.packbits(bits[idx], axis=1) ^ _SCRAMBLE_MASK
    return body[:, 0].copy(), body[:, 1:].copy(), scores_at(bits, starts)


def descramble_and_extract(stream, sync: SyncState) -> list[FrameRecord]:
    """Cut every complete frame after ``sync.frame_start_bit`` into header and codeword."""
    if not sync.locked:
        raise ValueError("descrambling needs a locked sync state")
    bits = np.asarray(stream, dtype=np.uint8)
    starts = np.arange(sync.frame_start_bit, len(bits) - FRAME_BITS + 1, FRAME_BITS)
    headers, words, scores = extract_frames(bits, starts)
    return [FrameRecord(int(s), int(h), w.tobytes(), int(c))
            for s, h, w, c in zip(starts, headers, words, scores)]
