"""Transceiver hardware impairments, multipath fading and noise.

Implements the full link model: transmitter IQ imbalance and Saleh PA,
tapped-delay-line Rician/Rayleigh channels, CFO/phase rotation, receiver
LNA nonlinearity and IQ imbalance, and AWGN. Every operator is a pure
function of (input, profile, seed); per-frame randomness is derived from
explicit seeds so frame-level parallelism stays bitwise reproducible.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .waveform import ComplexFrame

CARRIER_HZ = 5.765e9

SALEH_DEFAULTS = {"alpha1": 2.1587, "beta1": 1.1517, "alpha2": 4.0033, "beta2": 9.1040}

# Seed-namespace constants so dataset, calibration and profile draws never
# collide on the same master seed.
SEED_NS_TRANSMITTERS = 90
SEED_NS_DATASET = 91
SEED_NS_CALIBRATION = 92


@dataclass
class SalehParams:
    alpha1: float = 2.1587
    beta1: float = 1.1517
    alpha2: float = 4.0033
    beta2: float = 9.1040

    def __post_init__(self) -> None:
        if self.beta1 <= 0 or self.beta2 <= 0:
            raise ValueError("Saleh beta parameters must be positive")


@dataclass
class TransmitterProfile:
    id: int
    gain_imbalance_db: float
    phase_imbalance_deg: float
    saleh: SalehParams | None = None
    ibo_db: float = 15.0
    cfo_ppm_range: float = 10.0


@dataclass
class ReceiverProfile:
    id: int
    gain_imbalance_db: float
    phase_imbalance_deg: float
    lna_a1: float = 1.0
    lna_a3: float = 0.0

    def __post_init__(self) -> None:
        if self.lna_a1 == 0:
            raise ValueError("lna_a1 must be nonzero")


@dataclass
class ChannelProfile:
    id: int
    avg_path_gains_db: list[float]
    delays_ns: list[float]
    fading: str = "rician"
    rician_k: float = 3.0
    max_doppler_hz: float = 25.0

    def __post_init__(self) -> None:
        if len(self.avg_path_gains_db) != len(self.delays_ns):
            raise ValueError("gain and delay lists must have equal length")
        if self.delays_ns[0] != 0:
            raise ValueError("first tap delay must be 0")
        if any(b <= a for a, b in zip(self.delays_ns, self.delays_ns[1:])):
            raise ValueError("tap delays must be strictly increasing")
        if self.fading not in ("rician", "rayleigh"):
            raise ValueError("fading must be 'rician' or 'rayleigh'")

    def delays_samples(self, sample_rate: float) -> np.ndarray:
        """Tap delays rounded to the nearest whole sample."""
        return np.round(np.asarray(self.delays_ns) * 1e-9 * sample_rate).astype(int)


@dataclass
class LinkRealization:
    """Per-frame random draw of everything between transmitter and noise."""

    cfo_hz: float
    phase_offset_rad: float
    tap_coeffs: np.ndarray
    tap_delays_samples: np.ndarray
    snr_db: float | None
    noise_seed: int


def standard_receivers() -> list[ReceiverProfile]:
    """The three receiver rows used throughout the experiments (a1 = 1)."""
    return [
        ReceiverProfile(0, gain_imbalance_db=0.08, phase_imbalance_deg=2.31, lna_a3=-0.005),
        ReceiverProfile(1, gain_imbalance_db=0.45, phase_imbalance_deg=-6.88, lna_a3=0.015),
        ReceiverProfile(2, gain_imbalance_db=-0.75, phase_imbalance_deg=-10.88, lna_a3=-0.055),
    ]


def standard_channels() -> list[ChannelProfile]:
    """The four power-delay-profile rows (H0..H3)."""
    return [
        ChannelProfile(0, [0, -7, -13], [0, 60, 220], fading="rician"),
        ChannelProfile(1, [0, -7, -13], [0, 60, 220], fading="rayleigh"),
        ChannelProfile(2, [0, -8, -10, -15], [0, 70, 130, 270], fading="rician"),
        ChannelProfile(3, [0, -8, -10, -15], [0, 70, 130, 270], fading="rayleigh"),
    ]


def make_transmitters(
    count: int = 12,
    seed: int = 0,
    gain_db_range: tuple[float, float] = (0.02, 1.0),
    phase_deg_range: tuple[float, float] = (2.0, 11.42),
    saleh_jitter_frac: float = 0.05,
    ibo_db: float = 15.0,
    cfo_ppm_range: float = 10.0,
) -> list[TransmitterProfile]:
    """Draw a deterministic population of transmitter fingerprints.

    Magnitudes are stratified across the stated ranges (one bin per
    transmitter, independently permuted for gain and phase) with random
    signs, so a population never collapses onto near-duplicate devices.
    Saleh parameters jitter multiplicatively within +-saleh_jitter_frac
    of the defaults.
    """
    rng = np.random.default_rng((seed, SEED_NS_TRANSMITTERS))
    lo_g, hi_g = gain_db_range
    lo_p, hi_p = phase_deg_range
    edges = np.linspace(0.0, 1.0, count + 1)
    u_gain = edges[:-1] + rng.uniform(0, 1, count) * (edges[1] - edges[0])
    u_phase = edges[:-1] + rng.uniform(0, 1, count) * (edges[1] - edges[0])
    gains = lo_g + rng.permutation(u_gain) * (hi_g - lo_g)
    phases = lo_p + rng.permutation(u_phase) * (hi_p - lo_p)
    gain_signs = rng.choice([-1.0, 1.0], count)
    phase_signs = rng.choice([-1.0, 1.0], count)
    profiles = []
    for i in range(count):
        jitter = 1.0 + saleh_jitter_frac * rng.uniform(-1, 1, 4)
        saleh = SalehParams(
            alpha1=SALEH_DEFAULTS["alpha1"] * jitter[0],
            beta1=SALEH_DEFAULTS["beta1"] * jitter[1],
            alpha2=SALEH_DEFAULTS["alpha2"] * jitter[2],
            beta2=SALEH_DEFAULTS["beta2"] * jitter[3],
        )
        profiles.append(
            TransmitterProfile(
                id=i,
                gain_imbalance_db=float(gain_signs[i] * gains[i]),
                phase_imbalance_deg=float(phase_signs[i] * phases[i]),
                saleh=saleh,
                ibo_db=ibo_db,
                cfo_ppm_range=cfo_ppm_range,
            )
        )
    return profiles


# ---------------------------------------------------------------------------
# array-level operators (hot path); frame-level wrappers follow


def iq_imbalance(x: np.ndarray, gain_db: float, phase_rad: float) -> np.ndarray:
    """g_I*x_I*e^{j theta/2} + j*g_Q*x_Q*e^{-j theta/2}."""
    g_i = 10 ** (0.5 * gain_db / 20)
    g_q = 10 ** (-0.5 * gain_db / 20)
    rot = np.exp(1j * phase_rad / 2)
    return g_i * x.real * rot + 1j * g_q * x.imag * np.conj(rot)


def saleh_am_am(r: np.ndarray, alpha1: float, beta1: float) -> np.ndarray:
    return alpha1 * r / (1 + beta1 * r**2)


def saleh_am_pm(r: np.ndarray, alpha2: float, beta2: float) -> np.ndarray:
    return alpha2 * r**2 / (1 + beta2 * r**2)


def _saleh_pa(x: np.ndarray, saleh: SalehParams, ibo_db: float) -> np.ndarray:
    """Back the input off from the saturation amplitude, distort, renormalize."""
    sat_power = 1.0 / saleh.beta1
    target = sat_power * 10 ** (-ibo_db / 10)
    x = x * np.sqrt(target / np.mean(np.abs(x) ** 2))
    r = np.abs(x)
    out = saleh_am_am(r, saleh.alpha1, saleh.beta1) * np.exp(
        1j * (np.angle(x) + saleh_am_pm(r, saleh.alpha2, saleh.beta2))
    )
    return out / np.sqrt(np.mean(np.abs(out) ** 2))


def _multipath(x: np.ndarray, taps: np.ndarray, delays: np.ndarray) -> np.ndarray:
    out = np.zeros(len(x) + int(delays[-1]), dtype=complex)
    for h, d in zip(taps, delays):
        out[d : d + len(x)] += h * x
    return out


def _cfo_phase(x: np.ndarray, cfo_hz: float, phase_rad: float, sample_rate: float) -> np.ndarray:
    n = np.arange(len(x))
    return x * np.exp(-1j * (2 * np.pi * cfo_hz * n / sample_rate + phase_rad))


def _lna(x: np.ndarray, a1: float, a3: float) -> np.ndarray:
    return a1 * x + a3 * x * np.abs(x) ** 2


def _awgn(x: np.ndarray, snr_db: float | None, rng: np.random.Generator) -> np.ndarray:
    if snr_db is None or math.isinf(snr_db):
        return x.copy()
    noise_power = np.mean(np.abs(x) ** 2) / 10 ** (snr_db / 10)
    noise = rng.standard_normal(len(x)) + 1j * rng.standard_normal(len(x))
    return x + np.sqrt(noise_power / 2) * noise


def draw_channel_taps(
    channel: ChannelProfile, rng: np.random.Generator
) -> np.ndarray:
    """Draw one set of tap coefficients, normalized to unit total mean power.

    Rayleigh taps are circular complex Gaussians at the profile powers;
    under Rician fading the first tap carries a line-of-sight component of
    power K/(K+1) with a uniform per-frame phase.
    """
    powers = 10 ** (np.asarray(channel.avg_path_gains_db, dtype=float) / 10)
    powers /= powers.sum()
    amps = np.sqrt(powers)
    n = len(powers)
    los_phase = rng.uniform(-np.pi, np.pi)
    scatter = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    taps = amps * scatter / np.sqrt(2)
    if channel.fading == "rician":
        k = channel.rician_k
        taps[0] = (
            np.sqrt(k / (k + 1)) * amps[0] * np.exp(1j * los_phase)
            + np.sqrt(1 / (k + 1)) * taps[0]
        )
    return taps


def draw_link_realization(
    tx: TransmitterProfile,
    channel: ChannelProfile,
    snr_db: float | None,
    seed: int | tuple,
    carrier_hz: float = CARRIER_HZ,
    sample_rate: float = 20e6,
) -> LinkRealization:
    """Derive all per-frame randomness from one seed, in a fixed order."""
    rng = np.random.default_rng(seed)
    cfo_bound = carrier_hz * tx.cfo_ppm_range * 1e-6
    cfo_hz = rng.uniform(-cfo_bound, cfo_bound) if cfo_bound > 0 else 0.0
    phase = rng.uniform(-np.pi, np.pi)
    taps = draw_channel_taps(channel, rng)
    noise_seed = int(rng.integers(0, 2**63 - 1))
    return LinkRealization(
        cfo_hz=float(cfo_hz),
        phase_offset_rad=float(phase),
        tap_coeffs=taps,
        tap_delays_samples=channel.delays_samples(sample_rate),
        snr_db=snr_db,
        noise_seed=noise_seed,
    )


# ---------------------------------------------------------------------------
# frame-level operators


def apply_tx_iq_imbalance(frame: ComplexFrame, profile: TransmitterProfile) -> ComplexFrame:
    out = iq_imbalance(frame.samples, profile.gain_imbalance_db,
                       np.deg2rad(profile.phase_imbalance_deg))
    return ComplexFrame(out, frame.sample_rate, frame.origin)


def apply_rx_iq_imbalance(frame: ComplexFrame, profile: ReceiverProfile) -> ComplexFrame:
    out = iq_imbalance(frame.samples, profile.gain_imbalance_db,
                       np.deg2rad(profile.phase_imbalance_deg))
    return ComplexFrame(out, frame.sample_rate, frame.origin)


def apply_saleh_pa(frame: ComplexFrame, profile: TransmitterProfile) -> ComplexFrame:
    if profile.saleh is None:
        return ComplexFrame(frame.samples.copy(), frame.sample_rate, frame.origin)
    return ComplexFrame(_saleh_pa(frame.samples, profile.saleh, profile.ibo_db),
                        frame.sample_rate, frame.origin)


def apply_multipath(frame: ComplexFrame, realization: LinkRealization) -> ComplexFrame:
    out = _multipath(frame.samples, realization.tap_coeffs,
                     realization.tap_delays_samples)
    return ComplexFrame(out, frame.sample_rate, frame.origin)


def apply_cfo_phase(frame: ComplexFrame, cfo_hz: float, phase_offset_rad: float) -> ComplexFrame:
    out = _cfo_phase(frame.samples, cfo_hz, phase_offset_rad, frame.sample_rate)
    return ComplexFrame(out, frame.sample_rate, frame.origin)


def apply_lna(frame: ComplexFrame, profile: ReceiverProfile) -> ComplexFrame:
    return ComplexFrame(_lna(frame.samples, profile.lna_a1, profile.lna_a3),
                        frame.sample_rate, frame.origin)


def add_awgn(frame: ComplexFrame, snr_db: float | None, seed: int | tuple) -> ComplexFrame:
    out = _awgn(frame.samples, snr_db, np.random.default_rng(seed))
    return ComplexFrame(out, frame.sample_rate, frame.origin)


def simulate_link(
    frame: ComplexFrame,
    tx: TransmitterProfile,
    channel: ChannelProfile,
    rx: ReceiverProfile,
    snr_db: float | None,
    seed: int | tuple,
    carrier_hz: float = CARRIER_HZ,
    high_end_rx: bool = False,
    realization: LinkRealization | None = None,
) -> ComplexFrame:
    """Run one frame through the whole link.

    Order: tx IQ imbalance -> Saleh PA -> multipath -> CFO+PO -> LNA ->
    rx IQ imbalance -> AWGN. high_end_rx skips the two receiver stages
    (an ideal capture chain). Passing an explicit realization overrides
    the seeded draw; noise still derives from the realization's noise_seed.
    """
    if realization is None:
        realization = draw_link_realization(
            tx, channel, snr_db, seed, carrier_hz, frame.sample_rate)
    x = iq_imbalance(frame.samples, tx.gain_imbalance_db,
                     np.deg2rad(tx.phase_imbalance_deg))
    if tx.saleh is not None:
        x = _saleh_pa(x, tx.saleh, tx.ibo_db)
    x = _multipath(x, realization.tap_coeffs, realization.tap_delays_samples)
    x = _cfo_phase(x, realization.cfo_hz, realization.phase_offset_rad,
                   frame.sample_rate)
    if not high_end_rx:
        x = _lna(x, rx.lna_a1, rx.lna_a3)
        x = iq_imbalance(x, rx.gain_imbalance_db,
                         np.deg2rad(rx.phase_imbalance_deg))
    x = _awgn(x, realization.snr_db, np.random.default_rng(realization.noise_seed))
    return ComplexFrame(x, frame.sample_rate, origin="received")
