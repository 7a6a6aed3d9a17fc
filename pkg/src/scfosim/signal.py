"""Analytic broadband test signals built from banks of sinusoids.

A ToneBankSignal is the "analog" ground truth of every experiment: a sum of
sinusoids with randomized amplitudes, frequencies and phases that can be
evaluated at any real-valued time.  Interference tones tied to antenna
sample clocks (or to fixed RF frequencies) are appended with inject().

Dense random banks double as band-limited noise: unlike RNG samples they
stay consistent when the same waveform is sampled on two different clock
grids, which the chain experiments rely on.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, replace
from fractions import Fraction

import numpy as np

from .errors import EmptyBand, UnknownAntenna

TWO_PI = 2.0 * np.pi


@dataclass(frozen=True)
class Tone:
    amplitude: float
    freq_hz: float
    phase_rad: float
    out_of_band: bool = False


@dataclass(frozen=True)
class ToneBankSignal:
    """Immutable sum-of-sinusoids signal; evaluation is pure."""

    tones: tuple[Tone, ...]
    seed: int
    band: tuple[float, float]

    def eval(self, t) -> np.ndarray | float:
        """Evaluate sum(a_k * sin(2*pi*f_k*t + phi_k)) at time(s) t (seconds)."""
        t_arr = np.asarray(t, dtype=np.float64)
        out = np.zeros(t_arr.shape, dtype=np.float64)
        for tone in self.tones:
            out += tone.amplitude * np.sin(TWO_PI * tone.freq_hz * t_arr + tone.phase_rad)
        if np.isscalar(t) or t_arr.ndim == 0:
            return float(out)
        return out

    def rms(self) -> float:
        """Analytic RMS: sqrt(sum a_k^2 / 2) (distinct tone frequencies)."""
        return float(np.sqrt(sum(tone.amplitude**2 for tone in self.tones) / 2.0))

    def arrays(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(amplitudes, freqs, phases) as float64 arrays, for bulk evaluation."""
        amps = np.array([t.amplitude for t in self.tones], dtype=np.float64)
        freqs = np.array([t.freq_hz for t in self.tones], dtype=np.float64)
        phases = np.array([t.phase_rad for t in self.tones], dtype=np.float64)
        return amps, freqs, phases


class InterferenceKind(enum.Enum):
    SELF_CLOCK_DERIVED = "self-clock"
    CROSS_CLOCK_LEAK = "cross-clock"
    FIXED_RF = "fixed-rf"
    ALIAS_PROBE = "alias-probe"


@dataclass(frozen=True)
class InterferenceSpec:
    """One injected spectral line.

    For clock-derived kinds the tone frequency is ``clock_scale * f_a`` of
    the governing antenna (the injected one for SELF_CLOCK_DERIVED, the
    named ``source_antenna`` for CROSS_CLOCK_LEAK); for the fixed kinds it
    is the absolute ``freq_hz``.
    """

    kind: InterferenceKind
    amplitude: float
    clock_scale: Fraction | None = None
    freq_hz: float | None = None
    source_antenna: str | None = None
    phase_rad: float = 0.0


def synth_signal(
    seed: int,
    n_tones: int,
    band: tuple[float, float],
    amp_dist: tuple = ("loguniform", 20.0),
    rms: float = 1.0,
) -> ToneBankSignal:
    """Reproducible random tone bank occupying ``band``, normalized to ``rms``.

    Frequencies are uniform in band via jittered strata so occupancy stays
    flat; amplitudes default to log-uniform over a 20 dB span (configurable:
    ("loguniform", span_db), ("uniform",) or ("equal",)) with a stride
    assignment that spreads strong and weak tones evenly across the band;
    phases uniform in [0, 2*pi).
    """
    if n_tones < 1:
        raise ValueError("n_tones must be >= 1")
    f_lo, f_hi = band
    if not (np.isfinite(f_lo) and np.isfinite(f_hi)) or f_hi < f_lo or f_hi < 0:
        raise EmptyBand(f"invalid band {band}")
    rng = np.random.default_rng(seed)
    if f_hi > f_lo:
        freqs = f_lo + (f_hi - f_lo) * (np.arange(n_tones) + rng.uniform(0, 1, n_tones)) / n_tones
    else:
        freqs = np.full(n_tones, f_lo)
    kind = amp_dist[0]
    if kind == "loguniform":
        span_db = amp_dist[1] if len(amp_dist) > 1 else 20.0
        amps = 10.0 ** (-_strata(n_tones, rng) * span_db / 20.0)
    elif kind == "uniform":
        amps = 0.1 + 0.9 * _strata(n_tones, rng)
    elif kind == "equal":
        amps = np.ones(n_tones)
    else:
        raise ValueError(f"unknown amplitude distribution {kind!r}")
    phases = rng.uniform(0.0, TWO_PI, n_tones)
    scale = rms / np.sqrt(np.sum(amps**2) / 2.0)
    tones = tuple(
        Tone(float(a * scale), float(f), float(p)) for a, f, p in zip(amps, freqs, phases)
    )
    return ToneBankSignal(tones=tones, seed=seed, band=(float(f_lo), float(f_hi)))


def _strata(n: int, rng: np.random.Generator) -> np.ndarray:
    """Jittered [0,1) strata visited with a coprime stride near 1/golden-ratio.

    Any short run of tones then samples the whole range, so per-sub-band
    power stays close to the band mean.
    """
    if n == 1:
        return rng.uniform(0.0, 1.0, 1)
    stride = 1
    for cand in range(int(0.618 * n), n):
        if np.gcd(cand, n) == 1:
            stride = cand
            break
    order = (np.arange(n) * stride) % n
    return (order + rng.uniform(0.0, 1.0, n)) / n


def combine(a: ToneBankSignal, b: ToneBankSignal) -> ToneBankSignal:
    """Union of two banks (linear superposition); keeps a's seed and band."""
    return replace(a, tones=a.tones + b.tones)


def inject(
    sig: ToneBankSignal,
    spec: InterferenceSpec,
    clocks: dict[str, Fraction],
    antenna: str,
) -> ToneBankSignal:
    """Append the interference tone of ``spec`` for stream ``antenna``.

    The frequency rule is evaluated on the exact rational clock and only then
    converted to a real.  Tones outside the signal band are tagged.
    """
    if spec.kind is InterferenceKind.SELF_CLOCK_DERIVED:
        ref = antenna
    elif spec.kind is InterferenceKind.CROSS_CLOCK_LEAK:
        ref = spec.source_antenna
    else:
        ref = None

    if ref is not None:
        if ref not in clocks:
            raise UnknownAntenna(f"antenna {ref!r} not in clock map {sorted(clocks)}")
        if spec.clock_scale is None:
            raise ValueError("clock-derived interference needs clock_scale")
        freq = float(Fraction(spec.clock_scale) * clocks[ref])
    else:
        if spec.freq_hz is None:
            raise ValueError(f"{spec.kind.value} interference needs freq_hz")
        freq = float(spec.freq_hz)

    f_lo, f_hi = sig.band
    tone = Tone(
        amplitude=float(spec.amplitude),
        freq_hz=freq,
        phase_rad=float(spec.phase_rad),
        out_of_band=not (f_lo <= freq <= f_hi),
    )
    return replace(sig, tones=sig.tones + (tone,))


def eval_tones(
    amps: np.ndarray, freqs: np.ndarray, phases: np.ndarray, t: np.ndarray, dtype=np.float64
) -> np.ndarray:
    """Bulk evaluation used by the streaming chains (per-chunk, in-place)."""
    tt = np.asarray(t, dtype=dtype)
    out = np.zeros(len(tt), dtype=dtype)
    tmp = np.empty_like(out)
    for a, f, p in zip(amps, freqs, phases):
        np.multiply(tt, dtype(TWO_PI * f), out=tmp)
        tmp += dtype(p)
        np.sin(tmp, out=tmp)
        tmp *= dtype(a)
        out += tmp
    return out


def save_tonebank(sig: ToneBankSignal, path) -> None:
    """One tone per line: amplitude, frequency_hz, phase_rad [, oob flag]."""
    with open(path, "w") as fh:
        fh.write(f"# tonebank seed={sig.seed} band={sig.band[0]!r},{sig.band[1]!r}\n")
        fh.write("# amplitude frequency_hz phase_rad out_of_band\n")
        for tone in sig.tones:
            fh.write(
                f"{tone.amplitude!r} {tone.freq_hz!r} {tone.phase_rad!r} "
                f"{int(tone.out_of_band)}\n"
            )


def load_tonebank(path) -> ToneBankSignal:
    seed = 0
    band = (0.0, 0.0)
    tones = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line.startswith("# tonebank"):
                parts = dict(p.split("=", 1) for p in line[2:].split() if "=" in p)
                seed = int(parts.get("seed", 0))
                lo, hi = parts["band"].split(",")
                band = (float(lo), float(hi))
                continue
            if not line or line.startswith("#"):
                continue
            cols = line.split()
            tones.append(
                Tone(float(cols[0]), float(cols[1]), float(cols[2]), bool(int(cols[3])))
            )
    return ToneBankSignal(tones=tuple(tones), seed=seed, band=band)
