"""Baseband simulator of a 60 GHz single-carrier DBPSK link with RS(255,239) framing."""
from .channel import AgcConfig, ChannelConfig, apply_agc, apply_channel, channel_response, received_power_dbm
from .config import LinkConfig, SweepConfig, load_config
from .framing import build_frame, compute_rate_ledger, scramble, serialize_stream
from .galois_fec import DecodeFailure, gf_mul, rs_decode, rs_encode
from .link import BerReport, ber_sweep, run_link
from .phy import DemodConfig, IqStream, TxConfig, diff_demodulate, diff_encode, eye_diagram, modulate, recover_timing
from .sequences import build_gold_pair, generate_msequence
from .sync import correlate_bank, descramble_and_extract, detect_preamble

__version__ = "0.1.0"
