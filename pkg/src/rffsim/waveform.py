"""Legacy WiFi preamble generation (20 MHz, 64-point OFDM).

Produces the short and long training fields used as transmitted frames and
as calibration challenge signals. Sequences follow the 802.11a/g legacy
definitions; every generated frame is normalized to unit average power.
"""

from dataclasses import dataclass, field

import numpy as np

SAMPLE_RATE_HZ = 20e6

# Short training sequence, subcarriers -26..26 (53 entries, DC at index 26).
_STF_SEQ = np.zeros(53, dtype=complex)
for _k, _v in {
    -24: 1 + 1j, -20: -1 - 1j, -16: 1 + 1j, -12: -1 - 1j, -8: -1 - 1j,
    -4: 1 + 1j, 4: -1 - 1j, 8: -1 - 1j, 12: 1 + 1j, 16: 1 + 1j,
    20: 1 + 1j, 24: 1 + 1j,
}.items():
    _STF_SEQ[_k + 26] = np.sqrt(13 / 6) * _v

# Long training sequence, subcarriers -26..26 (+-1 on the 52 active bins).
_LTF_SEQ = np.array(
    [1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1,
     1, -1, 1, 1, 1, 1, 0, 1, -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1,
     -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1],
    dtype=complex,
)


@dataclass
class ComplexFrame:
    """A finite sequence of complex baseband samples plus metadata.

    origin tags where the samples came from: 'synthesized', 'received'
    or 'calibrated'.
    """

    samples: np.ndarray
    sample_rate: float = SAMPLE_RATE_HZ
    origin: str = "synthesized"

    def __post_init__(self) -> None:
        self.samples = np.asarray(self.samples, dtype=complex)
        if self.samples.size == 0:
            raise ValueError("frame must contain at least one sample")
        if not np.all(np.isfinite(self.samples.view(float))):
            raise ValueError("frame contains NaN/Inf samples")
        if self.sample_rate <= 0:
            raise ValueError("sample_rate must be positive")

    def __len__(self) -> int:
        return len(self.samples)

    @property
    def mean_power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


def _default_active_subcarriers() -> list[int]:
    return [k for k in range(-26, 27) if k != 0]


@dataclass
class PreambleLayout:
    """Sample-layout constants of the legacy preamble."""

    stf_len: int = 160
    ltf_len: int = 160
    ltf_cp_len: int = 32
    fft_size: int = 64
    active_subcarriers: list[int] = field(default_factory=_default_active_subcarriers)

    def __post_init__(self) -> None:
        if self.fft_size != (self.ltf_len - self.ltf_cp_len) // 2:
            raise ValueError("fft_size must equal (ltf_len - ltf_cp_len)/2")
        if any(k == 0 or abs(k) > 26 for k in self.active_subcarriers):
            raise ValueError("active subcarriers must exclude DC and |k|>26")


def _freq_to_bins(seq53: np.ndarray, fft_size: int = 64) -> np.ndarray:
    """Map a -26..26 subcarrier sequence onto FFT bin order."""
    bins = np.zeros(fft_size, dtype=complex)
    for k in range(-26, 27):
        bins[k % fft_size] = seq53[k + 26]
    return bins


def _ofdm_symbol(seq53: np.ndarray) -> np.ndarray:
    """64-sample time-domain symbol of a -26..26 frequency sequence."""
    return np.fft.ifft(_freq_to_bins(seq53))


def _unit_power(x: np.ndarray) -> np.ndarray:
    return x / np.sqrt(np.mean(np.abs(x) ** 2))


def generate_stf(sample_rate: float = SAMPLE_RATE_HZ) -> ComplexFrame:
    """Short training field: 10 repetitions of a 16-sample symbol.

    8 us at 20 MHz = 160 samples, unit average power.
    """
    symbol = _ofdm_symbol(_STF_SEQ)
    stf = np.tile(symbol[:16], 10)
    return ComplexFrame(_unit_power(stf), sample_rate)


def generate_ltf(sample_rate: float = SAMPLE_RATE_HZ) -> ComplexFrame:
    """Long training field: 32-sample CP + two identical 64-sample symbols."""
    symbol = _ofdm_symbol(_LTF_SEQ)
    ltf = np.concatenate([symbol[-32:], symbol, symbol])
    return ComplexFrame(_unit_power(ltf), sample_rate)


def ltf_reference_symbol() -> np.ndarray:
    """One clean 64-sample LTF symbol at the power scale of generate_ltf.

    Used by packet detection for cross-correlation timing.
    """
    return generate_ltf().samples[32:96]


def _data_symbol(rng: np.random.Generator, bpsk: bool = False) -> np.ndarray:
    """One 80-sample OFDM symbol (16-sample CP) with random bits."""
    seq = np.zeros(53, dtype=complex)
    active = [k + 26 for k in _default_active_subcarriers()]
    if bpsk:
        seq[active] = rng.integers(0, 2, len(active)) * 2 - 1
    else:
        bits = rng.integers(0, 2, (len(active), 2))
        seq[active] = ((bits[:, 0] * 2 - 1) + 1j * (bits[:, 1] * 2 - 1)) / np.sqrt(2)
    symbol = _ofdm_symbol(seq)
    return np.concatenate([symbol[-16:], symbol])


def assemble_frame(
    include_sig: bool = False,
    payload_symbols: int = 0,
    seed: int = 0,
    sample_rate: float = SAMPLE_RATE_HZ,
) -> ComplexFrame:
    """STF + LTF, optionally followed by an L-SIG symbol and random payload.

    The default preamble-only frame (320 samples) is all the downstream
    pipeline consumes; payload generation is kept behind the flag for
    realism experiments.
    """
    if payload_symbols < 0:
        raise ValueError("payload_symbols must be >= 0")
    parts = [generate_stf(sample_rate).samples, generate_ltf(sample_rate).samples]
    if include_sig or payload_symbols:
        rng = np.random.default_rng(seed)
        if include_sig:
            parts.append(_unit_power(_data_symbol(rng, bpsk=True)))
        for _ in range(payload_symbols):
            parts.append(_unit_power(_data_symbol(rng)))
    return ComplexFrame(np.concatenate(parts), sample_rate)
