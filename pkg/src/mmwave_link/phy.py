"""Baseband DBPSK modem: differential coding, NRZ + band-limit, delay-and-multiply detection.

Everything runs on the complex baseband equivalent at ``samples_per_symbol``
samples per 875 Msym/s symbol. Bit 0 maps to +1, bit 1 to -1.

The stateful :class:`Modulator` and :class:`DiffDemodulator` carry filter
state across calls so long transfers can be pushed through in blocks; the
module-level functions are one-shot wrappers.
"""
from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache

import numpy as np
from scipy import signal
from scipy.linalg import convolution_matrix

SYMBOL_RATE = 875e6
DEFAULT_SPS = 8
MIN_TIMING_SYMBOLS = 512


@dataclass(frozen=True)
class IqStream:
    samples: np.ndarray
    samples_per_symbol: int = DEFAULT_SPS
    symbol_rate: float = SYMBOL_RATE

    def __post_init__(self):
        if self.samples_per_symbol < 4:
            raise ValueError("samples_per_symbol must be >= 4")

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol

    def with_samples(self, samples) -> "IqStream":
        return replace(self, samples=np.asarray(samples))


@dataclass(frozen=True)
class TxConfig:
    samples_per_symbol: int = DEFAULT_SPS
    symbol_rate: float = SYMBOL_RATE
    bandwidth_hz: float | None = 1.0e9   # one-sided baseband cutoff; None disables the filter
    filter_order: int = 6

    @property
    def sample_rate(self) -> float:
        return self.symbol_rate * self.samples_per_symbol


@dataclass(frozen=True)
class DemodConfig:
    delay_symbols: int = 1
    lpf_cutoff_hz: float | None = 1.8e9
    lpf_order: int = 4
    decision_offset: int | None = None   # timing phase in samples; None = nominal
    matched_filter: bool = True
    equalizer_taps: int = 15              # symbol-spaced ZF taps against the TX band-limit; 0 = off

    def __post_init__(self):
        if self.equalizer_taps < 0:
            raise ValueError("equalizer_taps must be non-negative")

    def delay_seconds(self, symbol_rate: float = SYMBOL_RATE) -> float:
        return self.delay_symbols / symbol_rate


def diff_encode(bits, initial: int = 0) -> np.ndarray:
    """b[k] = d[k] XOR b[k-1] with b[-1] = ``initial``."""
    d = np.asarray(bits, dtype=np.uint8)
    if d.size == 0:
        return d.copy()
    return np.bitwise_xor.accumulate(d) ^ np.uint8(initial & 1)


def diff_decode(bits, initial: int = 0) -> np.ndarray:
    b = np.asarray(bits, dtype=np.uint8)
    prev = np.concatenate([[initial & 1], b[:-1]]).astype(np.uint8)
    return b ^ prev


def _tx_sos(tx: TxConfig):
    if tx.bandwidth_hz is None:
        return None
    if not tx.bandwidth_hz < tx.sample_rate / 2:
        raise ValueError("transmit bandwidth must be below the Nyquist frequency")
    return signal.butter(tx.filter_order, tx.bandwidth_hz, fs=tx.sample_rate, output="sos")


@lru_cache(maxsize=None)
def _tx_pulse(tx: TxConfig) -> tuple[np.ndarray, float]:
    """Unnormalised single-symbol pulse and the power of a random-NRZ stream."""
    sps = tx.samples_per_symbol
    sos = _tx_sos(tx)
    rect = np.ones(sps)
    if sos is None:
        return rect, 1.0
    n = 256 * sps
    x = np.zeros(n)
    x[:sps] = 1.0
    g = signal.sosfilt(sos, x)
    energy = np.cumsum(g ** 2)
    keep = int(np.searchsorted(energy, energy[-1] * (1 - 1e-9))) + 1
    # iid +-1 symbols: mean power = pulse energy per symbol period
    return g[:keep], float(energy[-1] / sps)


def tx_pulse(tx: TxConfig = TxConfig()) -> np.ndarray:
    """The transmitted single-symbol pulse at unit average stream power."""
    g, power = _tx_pulse(tx)
    return g / np.sqrt(power)


class Modulator:
    def __init__(self, tx: TxConfig = TxConfig()):
        self.tx = tx
        self._sos = _tx_sos(tx)
        self._gain = 1.0 / np.sqrt(_tx_pulse(tx)[1])
        self._zi = None if self._sos is None else np.zeros((self._sos.shape[0], 2))

    def process(self, bits) -> np.ndarray:
        levels = 1.0 - 2.0 * np.asarray(bits, dtype=np.float64)
        x = np.repeat(levels, self.tx.samples_per_symbol)
        if self._sos is not None:
            x, self._zi = signal.sosfilt(self._sos, x, zi=self._zi)
        return (x * self._gain).astype(np.complex128)


def modulate(bits, samples_per_symbol: int = DEFAULT_SPS, tx: TxConfig | None = None) -> IqStream:
    """NRZ-map ``bits`` and band-limit them; output has unit average power."""
    if samples_per_symbol < 4:
        raise ValueError("samples_per_symbol must be >= 4")
    tx = tx or TxConfig(samples_per_symbol=samples_per_symbol)
    if tx.samples_per_symbol != samples_per_symbol:
        tx = replace(tx, samples_per_symbol=samples_per_symbol)
    return IqStream(Modulator(tx).process(bits), samples_per_symbol, tx.symbol_rate)


def _matched_taps(tx: TxConfig) -> np.ndarray:
    g = tx_pulse(tx)
    taps = g[::-1].copy()
    return taps / taps.sum()


@lru_cache(maxsize=None)
def _equalizer(tx: TxConfig, matched: bool, n_taps: int) -> np.ndarray:
    """Symbol-spaced least-squares zero-forcing equalizer, expanded to the sample grid.

    Designed on the known transmit pulse (through the matched filter when it
    is on), so it removes the transmit filter's ISI and nothing channel-specific.
    """
    sps = tx.samples_per_symbol
    q = tx_pulse(tx)
    if matched:
        q = np.convolve(q, _matched_taps(tx))
    peak = int(np.argmax(np.abs(q)))
    k = np.arange(-(peak // sps), (len(q) - 1 - peak) // sps + 1)
    h = q[peak + k * sps]
    a = convolution_matrix(h, n_taps)
    target = np.zeros(a.shape[0])
    target[int(np.flatnonzero(k == 0)[0]) + n_taps // 2] = h[k == 0][0]
    c = np.linalg.lstsq(a, target, rcond=None)[0]
    taps = np.zeros((n_taps - 1) * sps + 1)
    taps[::sps] = c
    return taps


class DiffDemodulator:
    """Pre-detection matched filter and equalizer, r(t) * conj(r(t - T)), real part, low-pass.

    ``process`` returns the oversampled low-pass output; sampling it is left
    to the caller (see :func:`diff_demodulate` and :func:`recover_timing`).
    """

    def __init__(self, tx: TxConfig = TxConfig(), cfg: DemodConfig = DemodConfig()):
        self.tx, self.cfg = tx, cfg
        fs = tx.sample_rate
        self._mf = _matched_taps(tx) if cfg.matched_filter else None
        self._mf_zi = None if self._mf is None else np.zeros(len(self._mf) - 1, dtype=np.complex128)
        use_eq = cfg.equalizer_taps > 0 and _tx_sos(tx) is not None
        self._eq = _equalizer(tx, cfg.matched_filter, cfg.equalizer_taps) if use_eq else None
        self._eq_zi = None if self._eq is None else np.zeros(len(self._eq) - 1, dtype=np.complex128)
        self._delay = cfg.delay_symbols * tx.samples_per_symbol
        self._hist = np.zeros(self._delay, dtype=np.complex128)
        if cfg.lpf_cutoff_hz is None:
            self._lpf = None
        else:
            if not cfg.lpf_cutoff_hz < fs / 2:
                raise ValueError("LPF cutoff must be below the Nyquist frequency")
            self._lpf = signal.butter(cfg.lpf_order, cfg.lpf_cutoff_hz, fs=fs, output="sos")
            self._lpf_zi = np.zeros((self._lpf.shape[0], 2))

    def process(self, samples) -> np.ndarray:
        r = np.asarray(samples, dtype=np.complex128)
        if self._mf is not None:
            r, self._mf_zi = signal.lfilter(self._mf, [1.0], r, zi=self._mf_zi)
        if self._eq is not None:
            r, self._eq_zi = signal.lfilter(self._eq, [1.0], r, zi=self._eq_zi)
        ext = np.concatenate([self._hist, r])
        delayed = ext[: len(r)]
        self._hist = ext[len(ext) - self._delay:]
        y = np.real(r * np.conj(delayed))
        if self._lpf is not None:
            y, self._lpf_zi = signal.sosfilt(self._lpf, y, zi=self._lpf_zi)
        return y


@lru_cache(maxsize=None)
def nominal_latency(tx: TxConfig = TxConfig(), cfg: DemodConfig = DemodConfig()) -> int:
    """Sample index of the first symbol's decision in a noiseless back-to-back run.

    Picked as the delay that maximises the mean signed soft value over a
    fixed pseudo-random sequence; whole-symbol latency and timing phase both
    come out of this one number.
    """
    sps = tx.samples_per_symbol
    rng = np.random.default_rng(0x5EED)
    d = rng.integers(0, 2, 2048).astype(np.uint8)
    b = diff_encode(d)
    demod = DiffDemodulator(tx, replace(cfg, decision_offset=None))
    y = demod.process(np.concatenate([Modulator(tx).process(b), np.zeros(64 * sps)]))
    expected = 1.0 - 2.0 * d[1:1024]
    best, best_score = 0, -np.inf
    for lat in range(0, 32 * sps):
        soft = y[lat + sps: lat + sps * 1024: sps][: len(expected)]
        score = float(np.mean(soft * expected))
        if score > best_score:
            best, best_score = lat, score
    return best


def decision_latency(tx: TxConfig, cfg: DemodConfig) -> int:
    """Total decision delay in samples honouring ``cfg.decision_offset`` as the phase."""
    base = nominal_latency(tx, replace(cfg, decision_offset=None))
    if cfg.decision_offset is None:
        return base
    sps = tx.samples_per_symbol
    phase = cfg.decision_offset % sps
    diff = (phase - base) % sps
    if diff > sps // 2:
        diff -= sps
    return base + diff


def decide(soft) -> np.ndarray:
    """Soft value < 0 means a phase change, i.e. data bit 1."""
    return (np.asarray(soft) < 0).astype(np.uint8)


def diff_demodulate(rx: IqStream, cfg: DemodConfig = DemodConfig(), tx: TxConfig | None = None) -> np.ndarray:
    """One soft value per received symbol, latency removed.

    The first value compares symbol 0 against silence and is 0.
    """
    tx = tx or TxConfig(samples_per_symbol=rx.samples_per_symbol, symbol_rate=rx.symbol_rate)
    sps = tx.samples_per_symbol
    nsym = len(rx.samples) // sps
    if nsym == 0:
        return np.zeros(0)
    lat = decision_latency(tx, cfg)
    y = DiffDemodulator(tx, cfg).process(np.concatenate([rx.samples, np.zeros(lat + sps)]))
    return y[lat: lat + nsym * sps: sps]


def recover_timing(soft_stream, samples_per_symbol: int = DEFAULT_SPS) -> int:
    """Timing phase (0..sps-1) with the largest mean |sample|: the widest eye opening."""
    y = np.asarray(soft_stream, dtype=np.float64)
    nsym = len(y) // samples_per_symbol
    if nsym < MIN_TIMING_SYMBOLS:
        raise ValueError(f"timing recovery needs at least {MIN_TIMING_SYMBOLS} symbols")
    folded = np.abs(y[: nsym * samples_per_symbol]).reshape(nsym, samples_per_symbol)
    if not folded.any():
        raise ValueError("no signal: demodulator output is all zero")
    return int(np.argmax(folded.mean(axis=0)))


def eye_diagram(soft_stream, samples_per_symbol: int = DEFAULT_SPS, traces: int = 200, start: int = 0) -> np.ndarray:
    """Fold the oversampled demodulator output into ``traces`` rows of one symbol each."""
    y = np.asarray(soft_stream)
    need = start + traces * samples_per_symbol
    if traces < 1 or len(y) < need:
        raise ValueError(f"eye diagram needs {need} samples, got {len(y)}")
    return y[start:need].reshape(traces, samples_per_symbol).copy()


def eye_opening(eye: np.ndarray, column: int) -> float:
    """Gap between the two decision clusters at ``column``: min of the top minus max of the bottom."""
    col = eye[:, column]
    hi, lo = col[col >= 0], col[col < 0]
    if hi.size == 0 or lo.size == 0:
        return float("nan")
    return float(hi.min() - lo.max())
