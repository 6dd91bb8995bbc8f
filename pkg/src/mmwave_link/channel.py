"""Channel impairments: distance power law, tap-delay line, Wiener phase noise, AWGN, AGC.

Power bookkeeping uses a dBm-equivalent scale: a sample stream of mean
power 1.0 stands for 0 dBm. The transmitter emits unit power, so after the
path scaling the stream power reads directly as the received IF level.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import signal

from .phy import DEFAULT_SPS, SYMBOL_RATE, IqStream, TxConfig, _tx_sos

RX_POWER_AT_1M_DBM = -34.0
MIN_RANGE_M, MAX_RANGE_M = 1.0, 10.0


def received_power_dbm(distance_m: float) -> float:
    """Free-space 20 dB/decade law anchored at -34 dBm for 1 m."""
    if not distance_m > 0:
        raise ValueError("distance must be positive")
    return RX_POWER_AT_1M_DBM - 20.0 * math.log10(distance_m)


def dbm_to_power(dbm: float) -> float:
    return 10.0 ** (dbm / 10.0)


def power_to_dbm(p: float) -> float:
    return 10.0 * math.log10(p)


@dataclass(frozen=True)
class AgcConfig:
    target_power: float = dbm_to_power(-26.0)
    min_gain_db: float = 8.0
    max_gain_db: float = 28.0
    window: int = 4096

    def __post_init__(self):
        if self.max_gain_db < self.min_gain_db:
            raise ValueError("AGC max gain below min gain")

    @property
    def dynamic_range_db(self) -> float:
        return self.max_gain_db - self.min_gain_db


def _default_taps(symbol_rate: float = SYMBOL_RATE):
    t = 1.0 / symbol_rate
    return ((0.0, 1.0 + 0j), (1.5 * t, 10 ** (-15 / 20) + 0j), (3.0 * t, 10 ** (-20 / 20) + 0j))


@dataclass(frozen=True)
class ChannelConfig:
    distance_m: float | None = 10.0          # None: no path scaling
    taps: tuple[tuple[float, complex], ...] = field(default_factory=_default_taps)
    ebn0_db: float | None = None             # None: noise off
    phase_noise_linewidth_hz: float = 0.0
    agc: AgcConfig = field(default_factory=AgcConfig)

    def __post_init__(self):
        if not self.taps:
            raise ValueError("channel needs at least one tap")
        if any(d < 0 for d, _ in self.taps):
            raise ValueError("tap delays must be non-negative")
        if self.distance_m is not None:
            if self.distance_m <= 0:
                raise ValueError("distance must be positive")
            if not MIN_RANGE_M <= self.distance_m <= MAX_RANGE_M:
                warnings.warn(f"distance {self.distance_m} m is outside the 1-10 m LOS operating range")
        gains = [abs(g) for _, g in self.taps]
        if gains[0] < max(gains):
            warnings.warn("first (LOS) tap is not the strongest")

    @classmethod
    def identity(cls) -> "ChannelConfig":
        return cls(distance_m=None, taps=((0.0, 1.0 + 0j),), ebn0_db=None)

    @property
    def amplitude_scale(self) -> float:
        if self.distance_m is None:
            return 1.0
        return math.sqrt(dbm_to_power(received_power_dbm(self.distance_m)))

    @property
    def tap_power(self) -> float:
        return float(sum(abs(g) ** 2 for _, g in self.taps))


def _tap_filter(taps, sample_rate: float) -> np.ndarray:
    """FIR taps on the sample grid; fractional delays split linearly between neighbours."""
    pos = [d * sample_rate for d, _ in taps]
    h = np.zeros(int(math.floor(max(pos))) + 2, dtype=np.complex128)
    for p, (_, g) in zip(pos, taps):
        i = int(math.floor(p + 1e-9))
        frac = p - i
        if frac < 1e-9:
            h[i] += g
        else:
            h[i] += g * (1 - frac)
            h[i + 1] += g * frac
    return np.trim_zeros(h, "b")


class Channel:
    """Stateful channel; block-by-block output equals whole-stream output for the filter part."""

    def __init__(self, cfg: ChannelConfig, sample_rate: float, samples_per_symbol: int, rng_seed: int = 0):
        self.cfg = cfg
        self.sps = samples_per_symbol
        self.fs = sample_rate
        self._h = _tap_filter(cfg.taps, sample_rate)
        self._zi = np.zeros(len(self._h) - 1, dtype=np.complex128)
        self._scale = cfg.amplitude_scale
        self._rng = np.random.default_rng(rng_seed)
        self._phase = 0.0
        self._pn_std = math.sqrt(2 * math.pi * cfg.phase_noise_linewidth_hz / sample_rate)
        if cfg.ebn0_db is None:
            self._noise_std = 0.0
        else:
            # Eb is energy per channel bit of the received signal: P_rx * T_sym
            p_rx = self._scale ** 2 * cfg.tap_power
            n0 = p_rx / sample_rate * self.sps / 10 ** (cfg.ebn0_db / 10)
            self._noise_std = math.sqrt(n0 * sample_rate / 2)

    def process(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if len(self._h) == 1:
            y = x * self._h[0]
        else:
            y, self._zi = signal.lfilter(self._h, [1.0], x, zi=self._zi)
        if self._scale != 1.0:
            y = y * self._scale
        if self._pn_std > 0:
            steps = self._rng.standard_normal(len(y)) * self._pn_std
            phi = self._phase + np.cumsum(steps)
            self._phase = float(phi[-1]) if len(phi) else self._phase
            y = y * np.exp(1j * phi)
        if self._noise_std > 0:
            noise = self._rng.standard_normal((2, len(y)))
            y = y + self._noise_std * (noise[0] + 1j * noise[1])
        return y


def apply_channel(tx: IqStream, cfg: ChannelConfig, rng_seed: int = 0) -> IqStream:
    ch = Channel(cfg, tx.sample_rate, tx.samples_per_symbol, rng_seed)
    return tx.with_samples(ch.process(tx.samples))


def phase_noise(n: int, linewidth_hz: float, sample_rate: float, rng_seed: int = 0) -> np.ndarray:
    """Wiener phase-noise rotation exp(j*phi) with increment variance 2*pi*linewidth/fs."""
    if linewidth_hz == 0:
        return np.ones(n, dtype=np.complex128)
    rng = np.random.default_rng(rng_seed)
    phi = np.cumsum(rng.standard_normal(n) * math.sqrt(2 * math.pi * linewidth_hz / sample_rate))
    return np.exp(1j * phi)


@dataclass
class AgcResult:
    out: IqStream
    applied_gain_db: float
    clamped: bool
    no_signal: bool


class Agc:
    """Causal sliding-window power detector driving a clamped gain."""

    def __init__(self, cfg: AgcConfig = AgcConfig()):
        self.cfg = cfg
        self._tail = np.zeros(0)
        self.gain_db_sum = 0.0
        self.samples = 0
        self.clamped = False
        self.no_signal = False

    def process(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.complex128)
        if len(x) == 0:
            return x
        w = self.cfg.window
        p = np.concatenate([self._tail, np.abs(x) ** 2])
        csum = np.concatenate([[0.0], np.cumsum(p)])
        end = np.arange(len(self._tail) + 1, len(p) + 1)
        begin = np.maximum(end - w, 0)
        mean_p = (csum[end] - csum[begin]) / (end - begin)
        self._tail = p[-(w - 1):] if w > 1 else np.zeros(0)
        lo, hi = self.cfg.min_gain_db, self.cfg.max_gain_db
        with np.errstate(divide="ignore"):
            want = 10 * np.log10(self.cfg.target_power / mean_p)
        silent = ~np.isfinite(want)
        if silent.any():
            self.no_signal = True
        gain_db = np.clip(np.where(silent, hi, want), lo, hi)
        full = (end - begin) == w
        if np.any(((want < lo) | (want > hi)) & full):
            self.clamped = True
        self.gain_db_sum += float(gain_db.sum())
        self.samples += len(gain_db)
        return x * 10 ** (gain_db / 20)

    @property
    def mean_gain_db(self) -> float:
        return self.gain_db_sum / self.samples if self.samples else self.cfg.max_gain_db


def apply_agc(rx: IqStream, cfg: AgcConfig = AgcConfig()) -> AgcResult:
    agc = Agc(cfg)
    out = agc.process(rx.samples)
    return AgcResult(rx.with_samples(out), agc.mean_gain_db, agc.clamped, agc.no_signal)


@dataclass
class ChannelResponse:
    frequency_hz: np.ndarray
    frequency_response: np.ndarray
    tap_delays_s: np.ndarray
    tap_magnitudes: np.ndarray


def channel_response(cfg: ChannelConfig, n_points: int = 401, tx: TxConfig | None = TxConfig(),
                     span_hz: float = 1e9) -> ChannelResponse:
    """Tap line (times the transmit band-limit filter unless ``tx`` is None) on a +-span grid.

    Path loss is excluded so the curve reads as the normalised RF-block response.
    """
    if n_points < 2:
        raise ValueError("need at least two frequency points")
    f = np.linspace(-span_hz, span_hz, n_points)
    delays = np.array([d for d, _ in cfg.taps])
    gains = np.array([g for _, g in cfg.taps], dtype=np.complex128)
    h = (gains[None, :] * np.exp(-2j * np.pi * f[:, None] * delays[None, :])).sum(axis=1)
    if tx is not None:
        sos = _tx_sos(tx)
        if sos is not None:
            _, hf = signal.sosfreqz(sos, worN=f, fs=tx.sample_rate)
            h = h * hf
    return ChannelResponse(f, h, delays, np.abs(gains))
