"""Link/sweep configuration and the flat ``key = value`` config-file format.

Every key mirrors a dataclass field; ``none``/``off`` clears optional values.
Taps are written as ``delay_s:gain`` pairs separated by ``;`` where gain is
any Python complex literal, e.g. ``taps = 0:1; 1.714e-9:0.178+0j``.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from pathlib import Path

from .channel import AgcConfig, ChannelConfig
from .phy import DemodConfig, TxConfig
from .sync import DEFAULT_THRESHOLD


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class LinkConfig:
    tx: TxConfig = field(default_factory=TxConfig)
    demod: DemodConfig = field(default_factory=DemodConfig)
    channel: ChannelConfig = field(default_factory=ChannelConfig)
    threshold: int = DEFAULT_THRESHOLD
    fec_enabled: bool = True
    block_frames: int = 64

    def with_ebn0(self, ebn0_db: float | None) -> "LinkConfig":
        return replace(self, channel=replace(self.channel, ebn0_db=ebn0_db))


@dataclass(frozen=True)
class SweepConfig:
    ebn0_points: tuple = (6.0, 8.0, 10.0)
    bits_per_point: int = 1_000_000
    link: LinkConfig = field(default_factory=LinkConfig)
    master_seed: int = 0

    def __post_init__(self):
        if self.bits_per_point < 100_000:
            raise ConfigError("bits_per_point must be at least 1e5")

    @property
    def channel(self) -> ChannelConfig:
        return self.link.channel

    @property
    def fec_enabled(self) -> bool:
        return self.link.fec_enabled


def _opt_float(v: str):
    return None if v.lower() in ("none", "off") else float(v)


def _opt_int(v: str):
    return None if v.lower() in ("none", "off") else int(v)


def _bool(v: str) -> bool:
    low = v.lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {v!r}")


def _taps(v: str):
    out = []
    for item in v.split(";"):
        item = item.strip()
        if not item:
            continue
        delay, gain = item.split(":")
        out.append((float(delay), complex(gain.replace(" ", ""))))
    return tuple(out)


def _points(v: str):
    return tuple(_opt_float(p.strip()) for p in v.split(",") if p.strip())


# key -> (section, field, parser)
KEYS = {
    "samples_per_symbol": ("tx", "samples_per_symbol", int),
    "symbol_rate": ("tx", "symbol_rate", float),
    "tx_bandwidth_hz": ("tx", "bandwidth_hz", _opt_float),
    "tx_filter_order": ("tx", "filter_order", int),
    "delay_symbols": ("demod", "delay_symbols", int),
    "lpf_cutoff_hz": ("demod", "lpf_cutoff_hz", _opt_float),
    "lpf_order": ("demod", "lpf_order", int),
    "decision_offset": ("demod", "decision_offset", _opt_int),
    "matched_filter": ("demod", "matched_filter", _bool),
    "equalizer_taps": ("demod", "equalizer_taps", int),
    "distance_m": ("channel", "distance_m", _opt_float),
    "taps": ("channel", "taps", _taps),
    "ebn0_db": ("channel", "ebn0_db", _opt_float),
    "phase_noise_linewidth_hz": ("channel", "phase_noise_linewidth_hz", float),
    "agc_target_power": ("agc", "target_power", float),
    "agc_min_gain_db": ("agc", "min_gain_db", float),
    "agc_max_gain_db": ("agc", "max_gain_db", float),
    "agc_window": ("agc", "window", int),
    "threshold": ("link", "threshold", int),
    "fec_enabled": ("link", "fec_enabled", _bool),
    "block_frames": ("link", "block_frames", int),
    "ebn0_points": ("sweep", "ebn0_points", _points),
    "bits_per_point": ("sweep", "bits_per_point", int),
    "master_seed": ("sweep", "master_seed", int),
}


def parse_config(text: str, base: SweepConfig | None = None) -> SweepConfig:
    values: dict[str, dict] = {s: {} for s in ("tx", "demod", "channel", "agc", "link", "sweep")}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        if key not in KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        section, name, conv = KEYS[key]
        try:
            values[section][name] = conv(val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key}: {exc}") from None
    base = base or SweepConfig()
    link = base.link
    try:
        channel = replace(link.channel, agc=replace(link.channel.agc, **values["agc"]), **values["channel"])
        link = replace(link, tx=replace(link.tx, **values["tx"]), demod=replace(link.demod, **values["demod"]),
                       channel=channel, **values["link"])
        return replace(base, link=link, **values["sweep"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: str | Path | None) -> SweepConfig:
    if path is None:
        return SweepConfig()
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text)


def _fmt(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, bool):
        return "true" if v else "false"
    return repr(v)


def dump_config(cfg: SweepConfig) -> str:
    link = cfg.link
    objs = {"tx": link.tx, "demod": link.demod, "channel": link.channel, "agc": link.channel.agc,
            "link": link, "sweep": cfg}
    lines = []
    for key, (section, name, _) in KEYS.items():
        v = getattr(objs[section], name)
        if key == "taps":
            text = "; ".join(f"{d!r}:{complex(g)!r}" for d, g in v)
        elif key == "ebn0_points":
            text = ", ".join(_fmt(p) for p in v)
        else:
            text = _fmt(v)
        lines.append(f"{key} = {text}")
    return "\n".join(lines) + "\n"
