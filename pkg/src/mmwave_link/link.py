"""End-to-end link: payload -> frames -> waveform -> channel -> sync -> FEC -> payload.

The waveform chain is pushed through in blocks of ``block_frames`` frames
with filter, channel and AGC state carried across blocks, so memory stays
bounded for multi-megabyte transfers. Error statistics use a genie
alignment of the decided bits against the transmitted ones; the receiver
proper (sync, descrambling, decoding, reassembly) never sees it.
"""
from __future__ import annotations

import csv
import io
import math
import time
from collections import Counter
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, replace

import numpy as np
from scipy import signal

from .channel import Agc, Channel, channel_response
from .config import LinkConfig, SweepConfig
from .framing import FRAME_BITS, PAYLOAD_BYTES, build_frames_batch
from .galois_fec import rs_decode_batch
from .phy import DiffDemodulator, Modulator, decide, diff_encode, eye_diagram, recover_timing
from .sequences import PREAMBLE_BITS
from .sync import extract_frames, track_frames

LEAD_IN_BITS = 64
TAIL_BITS = 64
LENGTH_PREFIX = 4
_GENIE_SPAN = 4096
_MAX_LAG = 256


@dataclass
class BerReport:
    bits_tx: int = 0
    bit_errors_raw: int = 0
    payload_bits: int = 0
    payload_bit_errors_raw: int = 0
    bit_errors_post_fec: int = 0
    frames_tx: int = 0
    frames_synced: int = 0
    false_locks: int = 0
    frames_corrected: int = 0
    frames_failed: int = 0
    frames_lost: int = 0
    symbols_corrected: int = 0
    lock_events: int = 0
    no_sync: bool = False
    payload_bytes: int = 0
    on_air_bits: int = 0
    channel_bit_rate: float = 875e6
    agc_gain_db: float = 0.0
    elapsed_wall_time: float = field(default=0.0, compare=False)

    @property
    def raw_ber(self) -> float:
        return self.bit_errors_raw / self.bits_tx if self.bits_tx else float("nan")

    @property
    def post_fec_ber(self) -> float:
        return self.bit_errors_post_fec / self.payload_bits if self.payload_bits else float("nan")

    @property
    def fer(self) -> float:
        return (self.frames_failed + self.frames_lost) / self.frames_tx if self.frames_tx else float("nan")

    @property
    def throughput_bps(self) -> float:
        """Delivered payload bits per on-air bit, scaled to the channel rate."""
        return 8 * self.payload_bytes / self.on_air_bits * self.channel_bit_rate if self.on_air_bits else 0.0

    def as_dict(self, wall_time: bool = False) -> dict:
        d = asdict(self)
        if not wall_time:
            d.pop("elapsed_wall_time")
        d.update(raw_ber=self.raw_ber, post_fec_ber=self.post_fec_ber, fer=self.fer,
                 throughput_bps=self.throughput_bps)
        return d


@dataclass
class LinkResult:
    payload_out: bytes
    report: BerReport


def chunk_payload(payload: bytes) -> np.ndarray:
    """Prefix the 4-byte big-endian length and cut into zero-padded 239-byte units."""
    blob = len(payload).to_bytes(LENGTH_PREFIX, "big") + bytes(payload)
    n = math.ceil(len(blob) / PAYLOAD_BYTES)
    buf = np.zeros(n * PAYLOAD_BYTES, dtype=np.uint8)
    buf[: len(blob)] = np.frombuffer(blob, dtype=np.uint8)
    return buf.reshape(n, PAYLOAD_BYTES)


def on_air_bits(units: np.ndarray) -> np.ndarray:
    """Lead-in, back-to-back frames, one closing preamble, idle tail.

    The closing preamble lets the last frame be confirmed by the second
    correlator bank.
    """
    air = build_frames_batch(units, np.arange(len(units)) % 256)
    return np.concatenate([np.zeros(LEAD_IN_BITS, np.uint8), np.unpackbits(air.ravel()),
                           PREAMBLE_BITS, np.zeros(TAIL_BITS, np.uint8)])


class _Waveform:
    """Transmitter, channel, AGC and demodulator chained with persistent state."""

    def __init__(self, cfg: LinkConfig, seed: int):
        tx = cfg.tx
        self.sps = tx.samples_per_symbol
        self.mod = Modulator(tx)
        self.channel = Channel(cfg.channel, tx.sample_rate, self.sps, seed)
        self.agc = Agc(cfg.channel.agc)
        self.demod = DiffDemodulator(tx, cfg.demod)
        self._enc_state = 0

    def process(self, bits: np.ndarray) -> np.ndarray:
        b = diff_encode(bits, self._enc_state)
        if len(b):
            self._enc_state = int(b[-1])
        return self.demod.process(self.agc.process(self.channel.process(self.mod.process(b))))


def demodulate_bits(tx_bits: np.ndarray, cfg: LinkConfig, seed: int) -> tuple[np.ndarray, float]:
    """Hard decisions for ``tx_bits`` sent over the configured link, plus the mean AGC gain."""
    wave = _Waveform(cfg, seed)
    sps = wave.sps
    step = cfg.block_frames * FRAME_BITS
    phase = cfg.demod.decision_offset
    done = 0
    out = []
    for start in range(0, len(tx_bits), step):
        y = wave.process(tx_bits[start:start + step])
        if phase is None:
            phase = recover_timing(y, sps)
        first = (phase - done) % sps
        out.append(decide(y[first::sps]))
        done += len(y)
    return np.concatenate(out) if out else np.zeros(0, np.uint8), wave.agc.mean_gain_db


def genie_lag(tx_bits: np.ndarray, rx_bits: np.ndarray) -> int:
    """Offset L with rx_bits[i + L] ~ tx_bits[i], found on the first frame bits."""
    lo = LEAD_IN_BITS
    span = min(_GENIE_SPAN, len(tx_bits) - lo - TAIL_BITS)
    ref = tx_bits[lo:lo + span]
    best, best_err = 0, None
    for lag in range(0, _MAX_LAG):
        seg = rx_bits[lo + lag: lo + lag + span]
        if len(seg) < span:
            break
        err = int(np.count_nonzero(seg != ref))
        if best_err is None or err < best_err:
            best, best_err = lag, err
    return best


def _segments(starts: np.ndarray) -> list[np.ndarray]:
    """Split frame starts into runs that are exactly one frame apart (one lock each)."""
    if len(starts) == 0:
        return []
    breaks = np.flatnonzero(np.diff(starts) != FRAME_BITS) + 1
    return np.split(np.arange(len(starts)), breaks)


def reassemble(starts, headers, data, counts, fec_enabled: bool) -> tuple[bytes, bool]:
    """Place decoded units by frame counter and strip the length prefix and padding.

    Within one lock, frames are consecutive; the absolute index of the run is
    anchored by a majority vote over ``(header - position) mod 256`` of the
    frames that decoded. Runs with no decodable frame are discarded.
    Returns ``(payload, length_known)``.
    """
    placed: dict[int, np.ndarray] = {}
    next_index = 0
    for seg in _segments(np.asarray(starts)):
        good = [i for i in seg if counts[i] >= 0] if fec_enabled else list(seg)
        if not good:
            continue
        pos = {i: k for k, i in enumerate(seg)}
        vote = Counter((int(headers[i]) - pos[i]) % 256 for i in good).most_common(1)[0][0]
        base = next_index + (vote - next_index) % 256
        for i in seg:
            placed.setdefault(base + pos[i], data[i])
        next_index = base + len(seg)
    if not placed:
        return b"", False
    n = max(placed) + 1
    buf = np.zeros((n, PAYLOAD_BYTES), dtype=np.uint8)
    for idx, unit in placed.items():
        buf[idx] = unit
    blob = buf.tobytes()
    if 0 in placed:
        length = int.from_bytes(blob[:LENGTH_PREFIX], "big")
        if length <= len(blob) - LENGTH_PREFIX:
            return blob[LENGTH_PREFIX:LENGTH_PREFIX + length], True
    return blob[LENGTH_PREFIX:], False


def run_link(payload: bytes, cfg: LinkConfig = LinkConfig(), seed: int = 0) -> LinkResult:
    if not payload:
        raise ValueError("payload must be non-empty")
    t0 = time.perf_counter()
    units = chunk_payload(payload)
    n = len(units)
    tx_bits = on_air_bits(units)
    rx_bits, agc_gain = demodulate_bits(tx_bits, cfg, seed)

    rep = BerReport(frames_tx=n, bits_tx=n * FRAME_BITS, payload_bytes=len(payload),
                    on_air_bits=len(tx_bits), channel_bit_rate=cfg.tx.symbol_rate, agc_gain_db=agc_gain)
    lag = genie_lag(tx_bits, rx_bits)
    lo, hi = LEAD_IN_BITS, LEAD_IN_BITS + n * FRAME_BITS
    hi_rx = min(hi, len(rx_bits) - lag)
    rep.bit_errors_raw = int(np.count_nonzero(rx_bits[lo + lag:hi_rx + lag] != tx_bits[lo:hi_rx]))
    rep.bit_errors_raw += max(0, hi - hi_rx)

    track = track_frames(rx_bits, cfg.threshold)
    rep.lock_events = len(track.locks)
    starts = track.starts
    if len(starts) == 0:
        rep.no_sync = True
        rep.frames_lost = n
        rep.elapsed_wall_time = time.perf_counter() - t0
        return LinkResult(b"", rep)

    headers, words, _ = extract_frames(rx_bits, starts)
    if cfg.fec_enabled:
        data, counts = rs_decode_batch(words)
    else:
        data, counts = words[:, :PAYLOAD_BYTES], np.zeros(len(words), dtype=np.int64)

    rel = starts - lag - LEAD_IN_BITS
    index = rel // FRAME_BITS
    true = (rel % FRAME_BITS == 0) & (index >= 0) & (index < n)
    rep.false_locks = int(np.count_nonzero(~true))
    idx = index[true]
    rep.frames_synced = len(np.unique(idx))
    rep.frames_lost = n - rep.frames_synced
    sent = units[idx]
    rep.payload_bits = len(idx) * PAYLOAD_BYTES * 8
    rep.payload_bit_errors_raw = int(np.unpackbits(words[true, :PAYLOAD_BYTES] ^ sent).sum())
    rep.bit_errors_post_fec = int(np.unpackbits(data[true] ^ sent).sum())
    c = counts[true]
    rep.frames_corrected = int(np.count_nonzero(c > 0))
    rep.frames_failed = int(np.count_nonzero(c < 0))
    rep.symbols_corrected = int(c[c > 0].sum())

    payload_out, _ = reassemble(starts, headers, data, counts, cfg.fec_enabled)
    rep.elapsed_wall_time = time.perf_counter() - t0
    return LinkResult(payload_out, rep)


@dataclass
class SweepRow:
    ebn0_db: float | None
    raw_ber: float
    post_fec_ber: float
    fer: float
    theory_ber: float
    bits: int
    raw_errors: int
    frames: int
    frames_failed: int
    frames_lost: int
    false_locks: int


def dbpsk_theory_ber(ebn0_db: float | None) -> float:
    if ebn0_db is None:
        return 0.0
    return 0.5 * math.exp(-(10 ** (ebn0_db / 10)))


def _sweep_point(args) -> SweepRow:
    ebn0, bits, link, entropy = args
    seq = np.random.SeedSequence(entropy)
    payload_seed, channel_seed = seq.generate_state(2)
    n_frames = math.ceil(bits / FRAME_BITS)
    rng = np.random.default_rng(payload_seed)
    payload = rng.integers(0, 256, n_frames * PAYLOAD_BYTES - LENGTH_PREFIX, dtype=np.uint8).tobytes()
    rep = run_link(payload, link.with_ebn0(ebn0), int(channel_seed)).report
    return SweepRow(ebn0, rep.raw_ber, rep.post_fec_ber, rep.fer, dbpsk_theory_ber(ebn0), rep.bits_tx,
                    rep.bit_errors_raw, rep.frames_tx, rep.frames_failed, rep.frames_lost, rep.false_locks)


def ber_sweep(cfg: SweepConfig, workers: int = 1) -> list[SweepRow]:
    """One :func:`run_link` per Eb/N0 point on pseudo-random payloads.

    Point ``i`` is seeded from ``(master_seed, i)``, so the result does not
    depend on ``workers``.
    """
    jobs = [(p, cfg.bits_per_point, cfg.link, [cfg.master_seed, i]) for i, p in enumerate(cfg.ebn0_points)]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_sweep_point, jobs))
    return [_sweep_point(j) for j in jobs]


def to_csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow(["none" if v is None else repr(float(v)) if isinstance(v, (float, np.floating)) else v
                    for v in row])
    return buf.getvalue()


def sweep_csv(rows: list[SweepRow]) -> str:
    header = list(SweepRow.__dataclass_fields__)
    return to_csv(header, [[getattr(r, h) for h in header] for r in rows])


def eye_matrix(cfg: LinkConfig, n_traces: int, seed: int = 0) -> np.ndarray:
    """Demodulator output over random data, folded so the decision instant sits mid-row."""
    sps = cfg.tx.samples_per_symbol
    skip = 64
    nsym = max(n_traces + skip + 2, 1024)
    rng = np.random.default_rng(seed)
    bits = rng.integers(0, 2, nsym).astype(np.uint8)
    y = _Waveform(cfg, seed + 1).process(bits)
    phase = cfg.demod.decision_offset
    if phase is None:
        phase = recover_timing(y[skip * sps:], sps)
    start = skip * sps + (phase - sps // 2) % sps
    return eye_diagram(y, sps, n_traces, start)


def export_eye(cfg: LinkConfig, n_traces: int, seed: int = 0) -> str:
    eye = eye_matrix(cfg, n_traces, seed)
    return to_csv([f"s{i}" for i in range(eye.shape[1])], eye.tolist())


def export_response(cfg: LinkConfig, n_points: int) -> tuple[str, str]:
    """Frequency response CSV and impulse-response (tap) CSV."""
    resp = channel_response(cfg.channel, n_points, cfg.tx)
    mag = np.abs(resp.frequency_response)
    with np.errstate(divide="ignore"):
        mag_db = 20 * np.log10(mag)
    freq = to_csv(["frequency_hz", "magnitude_db", "phase_rad"],
                  zip(resp.frequency_hz, mag_db, np.angle(resp.frequency_response)))
    imp = to_csv(["delay_s", "magnitude"], zip(resp.tap_delays_s, resp.tap_magnitudes))
    return freq, imp


def transmit_spectrum(cfg: LinkConfig, seed: int = 0, nsym: int = 1 << 16, nperseg: int = 1024):
    """Two-sided Welch PSD (Hann window, 50 % overlap) of the band-limited transmit stream.

    Returns ``(frequency_hz, psd_db)`` with the PSD normalised to its peak.
    """
    rng = np.random.default_rng(seed)
    x = Modulator(cfg.tx).process(rng.integers(0, 2, nsym))
    f, p = signal.welch(x, fs=cfg.tx.sample_rate, window="hann", nperseg=nperseg,
                        return_onesided=False, scaling="density")
    f, p = np.fft.fftshift(f), np.fft.fftshift(p)
    return f, 10 * np.log10(p / p.max())


def export_spectrum(cfg: LinkConfig, seed: int = 0, nperseg: int = 1024) -> str:
    f, p = transmit_spectrum(cfg, seed, nperseg=nperseg)
    return to_csv(["frequency_hz", "psd_db"], zip(f, p))
