"""Transmit waveforms (PSK frames, OFDM grids, chirps) and signal criteria."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import errors

_SQRT2 = np.sqrt(2.0)


# ---------------------------------------------------------------------------
# types
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ModulationLayout:
    """Describes how bits are mapped onto the waveform resource grid.

    kind is one of 'single-carrier-psk', 'ofdm', 'chirp'.  For OFDM the grid
    is (n_subcarriers x n_symbols); pilot_mask marks pilot cells and must be
    contained in the active subcarrier rows.  data_bits are laid out
    subcarrier-major within each symbol, symbols in time order.
    """

    kind: str
    bits_per_symbol: int = 1
    n_subcarriers: int = 0
    n_symbols: int = 0
    pilot_mask: np.ndarray | None = None          # bool (n_sc, n_sym)
    active_subcarriers: tuple[int, ...] = ()
    data_bits: np.ndarray = field(default_factory=lambda: np.zeros(0, np.uint8))
    oversampling: int = 1

    def __post_init__(self):
        object.__setattr__(self, "data_bits",
                           np.asarray(self.data_bits, dtype=np.uint8))
        if self.kind == "ofdm":
            if len(self.active_subcarriers) == 0:
                raise errors.LayoutError("OFDM layout needs active subcarriers")
            mask = self.pilot_mask
            if mask is None:
                mask = np.zeros((self.n_subcarriers, self.n_symbols), bool)
                object.__setattr__(self, "pilot_mask", mask)
            if mask.shape != (self.n_subcarriers, self.n_symbols):
                raise errors.LayoutError(
                    f"pilot mask shape {mask.shape} != grid "
                    f"({self.n_subcarriers}, {self.n_symbols})")
            active = np.zeros(self.n_subcarriers, bool)
            active[list(self.active_subcarriers)] = True
            if mask[~active].any():
                raise errors.LayoutError("pilot cells on inactive subcarriers")
            n_data = int(active.sum() * self.n_symbols - mask.sum())
            if n_data * self.bits_per_symbol != self.data_bits.size:
                raise errors.LayoutError(
                    f"{n_data} data cells x {self.bits_per_symbol} bits != "
                    f"{self.data_bits.size} data bits")

    @property
    def n_data_cells(self) -> int:
        active = np.zeros(self.n_subcarriers, bool)
        active[list(self.active_subcarriers)] = True
        return int(active.sum() * self.n_symbols - self.pilot_mask.sum())


@dataclass(frozen=True)
class Waveform:
    """Complex baseband samples with time/frequency support descriptors."""

    samples: np.ndarray
    sample_rate: float
    band: tuple[float, float]
    layout: ModulationLayout | None = None

    def __post_init__(self):
        object.__setattr__(self, "samples",
                           np.asarray(self.samples, dtype=np.complex128))
        fs = self.sample_rate
        lo, hi = self.band
        if not (-fs / 2 - 1e-9 <= lo < hi <= fs / 2 + 1e-9):
            raise ValueError(f"band {self.band} outside [-fs/2, fs/2]")

    def __len__(self):
        return self.samples.size

    @property
    def duration(self) -> float:
        return self.samples.size / self.sample_rate

    @property
    def energy(self) -> float:
        """Continuous-convention energy: sum |u|^2 / fs."""
        return float(np.sum(np.abs(self.samples) ** 2) / self.sample_rate)

    @property
    def power(self) -> float:
        return float(np.mean(np.abs(self.samples) ** 2))


@dataclass(frozen=True)
class SpectrumProfile:
    """Sampled power spectral density; integrates to the signal power."""

    freqs: np.ndarray      # Hz, ascending
    psd: np.ndarray        # W/Hz, nonnegative


@dataclass(frozen=True)
class InformativenessReport:
    occupied_bins: tuple[int, ...]
    required_bins: tuple[int, ...]
    gap_list: tuple[int, ...]
    bin_freqs: np.ndarray
    threshold_db: float

    @property
    def is_informative(self) -> bool:
        return len(self.gap_list) == 0


# ---------------------------------------------------------------------------
# symbol mappings
# ---------------------------------------------------------------------------

def map_psk(bits: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Gray-mapped unit-energy BPSK/QPSK symbols.

    BPSK: bit 0 -> +1, bit 1 -> -1.
    QPSK: first bit sets the sign of the real part, second bit of the
    imaginary part (Gray: adjacent constellation points differ in one bit).
    """
    bits = np.asarray(bits, dtype=np.uint8)
    if bits_per_symbol not in (1, 2):
        raise errors.LengthError(f"bits_per_symbol must be 1 or 2, got {bits_per_symbol}")
    if bits.size % bits_per_symbol:
        raise errors.LengthError(
            f"{bits.size} bits not divisible by {bits_per_symbol}")
    if bits_per_symbol == 1:
        return (1.0 - 2.0 * bits).astype(np.complex128)
    b = bits.reshape(-1, 2).astype(float)
    return ((1 - 2 * b[:, 0]) + 1j * (1 - 2 * b[:, 1])) / _SQRT2


def slice_psk(symbols: np.ndarray, bits_per_symbol: int) -> np.ndarray:
    """Hard decision, inverse of map_psk."""
    symbols = np.asarray(symbols)
    if bits_per_symbol == 1:
        return (symbols.real < 0).astype(np.uint8)
    out = np.empty((symbols.size, 2), np.uint8)
    out[:, 0] = symbols.real < 0
    out[:, 1] = symbols.imag < 0
    return out.reshape(-1)


def pilot_sequence(n: int) -> np.ndarray:
    """Fixed QPSK pilot sequence from a 16-bit Fibonacci LFSR.

    Polynomial x^16 + x^14 + x^13 + x^11 + 1, seed 0xACE1; two output bits
    per QPSK pilot symbol.  Fully deterministic and documented so receivers
    can regenerate it.
    """
    state = 0xACE1
    bits = np.empty(2 * n, np.uint8)
    for i in range(2 * n):
        bit = ((state >> 0) ^ (state >> 2) ^ (state >> 3) ^ (state >> 5)) & 1
        state = (state >> 1) | (bit << 15)
        bits[i] = state & 1
    return map_psk(bits, 2)


# ---------------------------------------------------------------------------
# generators
# ---------------------------------------------------------------------------

def generate_psk_frame(bits, bits_per_symbol: int, sample_rate: float,
                       oversampling: int = 1) -> Waveform:
    """Rectangular-pulse PSK frame with unit energy per symbol sample."""
    symbols = map_psk(bits, bits_per_symbol)
    samples = np.repeat(symbols, oversampling)
    rs = sample_rate / oversampling
    layout = ModulationLayout(kind="single-carrier-psk",
                              bits_per_symbol=bits_per_symbol,
                              data_bits=np.asarray(bits, np.uint8),
                              oversampling=oversampling)
    return Waveform(samples, sample_rate, (-rs / 2, rs / 2), layout)


def generate_ofdm(layout: ModulationLayout, sample_rate: float,
                  cp_length: int) -> Waveform:
    """Inverse-DFT OFDM synthesis with cyclic prefix.

    Subcarrier k occupies DFT bin k (frequency k*fs/n_sc, aliased to the
    baseband interval).  Pilot cells are filled from pilot_sequence; data
    cells from Gray-mapped PSK symbols of layout.data_bits.
    """
    if layout.kind != "ofdm":
        raise errors.LayoutError("layout kind must be 'ofdm'")
    n_sc, n_sym = layout.n_subcarriers, layout.n_symbols
    if cp_length >= n_sc:
        raise errors.LayoutError(f"cp_length {cp_length} >= symbol length {n_sc}")
    active = np.zeros(n_sc, bool)
    active[list(layout.active_subcarriers)] = True

    grid = np.zeros((n_sc, n_sym), np.complex128)
    pilots = layout.pilot_mask
    n_pilots = int(pilots.sum())
    grid[pilots] = pilot_sequence(n_pilots)
    data_cells = active[:, None] & ~pilots
    data_syms = map_psk(layout.data_bits, layout.bits_per_symbol)
    # column-major fill would scatter across symbols; fill symbol by symbol,
    # subcarrier-major, to match the demodulator traversal
    grid.T[data_cells.T] = data_syms

    time_syms = np.fft.ifft(grid, axis=0) * np.sqrt(n_sc)
    with_cp = np.concatenate([time_syms[-cp_length:, :] if cp_length else
                              np.zeros((0, n_sym)), time_syms], axis=0)
    samples = with_cp.reshape(-1, order="F")

    df = sample_rate / n_sc
    freqs = np.fft.fftfreq(n_sc, 1.0 / sample_rate)
    used = freqs[list(layout.active_subcarriers)]
    band = (float(used.min() - df / 2), float(used.max() + df / 2))
    band = (max(band[0], -sample_rate / 2), min(band[1], sample_rate / 2))
    return Waveform(samples, sample_rate, band, layout)


def generate_chirp(bandwidth: float, duration: float,
                   sample_rate: float) -> Waveform:
    """Unit-amplitude linear FM sweep from -B/2 to +B/2."""
    if bandwidth > sample_rate:
        raise ValueError("bandwidth exceeds sample rate")
    n = int(round(duration * sample_rate))
    t = np.arange(n) / sample_rate
    phase = 2 * np.pi * (-bandwidth / 2 * t + bandwidth / (2 * duration) * t ** 2)
    layout = ModulationLayout(kind="chirp")
    half = max(bandwidth / 2, sample_rate / (2 * max(n, 1)))
    return Waveform(np.exp(1j * phase), sample_rate, (-half, half), layout)


# ---------------------------------------------------------------------------
# signal criteria
# ---------------------------------------------------------------------------

def papr(u: Waveform | np.ndarray) -> float:
    """Peak-to-average power ratio max|u|^2 / mean|u|^2 (linear)."""
    x = u.samples if isinstance(u, Waveform) else np.asarray(u)
    p = np.abs(x) ** 2
    if not p.any():
        raise errors.ZeroSignalError("PAPR of an all-zero signal")
    return float(p.max() / p.mean())


def to_db(ratio: float) -> float:
    return float(10.0 * np.log10(ratio))


def spectrum_profile(u: Waveform) -> SpectrumProfile:
    """Periodogram PSD; Parseval-exact (integrates to the signal power)."""
    n = len(u)
    spec = np.fft.fftshift(np.abs(np.fft.fft(u.samples)) ** 2)
    freqs = np.fft.fftshift(np.fft.fftfreq(n, 1.0 / u.sample_rate))
    psd = spec / (n * u.sample_rate)
    return SpectrumProfile(freqs, psd)


def energy_spectral_density(u: Waveform) -> SpectrumProfile:
    """|u(f)|^2 with the continuous-transform scaling (integrates to energy)."""
    prof = spectrum_profile(u)
    return SpectrumProfile(prof.freqs, prof.psd * u.duration)


def _spectral_support(u: Waveform):
    """(freqs, energy-per-bin) on the natural grid of the waveform.

    OFDM frames are analyzed on the subcarrier grid after CP removal, so
    inactive subcarriers show their exact (zero) allocation instead of
    window leakage.  Everything else uses the periodogram grid.
    """
    lay = u.layout
    if lay is not None and lay.kind == "ofdm":
        n_sc, n_sym = lay.n_subcarriers, lay.n_symbols
        sym_len = len(u) // n_sym
        cp = sym_len - n_sc
        blocks = u.samples.reshape(sym_len, n_sym, order="F")[cp:, :]
        grid = np.fft.fft(blocks, axis=0) / np.sqrt(n_sc)
        energy = (np.abs(grid) ** 2).sum(axis=1)
        freqs = np.fft.fftfreq(n_sc, 1.0 / u.sample_rate)
        order = np.argsort(freqs)
        return freqs[order], energy[order], np.arange(n_sc)[order]
    prof = spectrum_profile(u)
    return prof.freqs, prof.psd.copy(), None


def informativeness_check(u: Waveform, dictionary, threshold_db: float = -40.0,
                          ) -> InformativenessReport:
    """Spectral-support coverage of the bins a dictionary distinguishes on.

    A delay-Doppler dictionary separates its hypotheses on the frequency
    support of its band; any bin inside that band carrying signal energy
    below `threshold_db` (relative to the strongest in-band bin) is a gap,
    i.e. a spectral region over which two candidate responses could differ
    while the probe carries no energy to tell them apart.
    """
    freqs, energy, labels = _spectral_support(u)
    lo, hi = dictionary.band
    required = np.nonzero((freqs >= lo) & (freqs <= hi))[0]
    if labels is None:
        labels = np.arange(freqs.size)
    if required.size == 0 or not energy[required].any():
        return InformativenessReport((), tuple(int(labels[i]) for i in required),
                                     tuple(int(labels[i]) for i in required),
                                     freqs, threshold_db)
    ref = energy[required].max()
    thresh = ref * 10.0 ** (threshold_db / 10.0)
    occ = required[energy[required] >= thresh]
    gap = required[energy[required] < thresh]
    as_labels = lambda idx: tuple(sorted(int(labels[i]) for i in idx))
    return InformativenessReport(as_labels(occ), as_labels(required),
                                 as_labels(gap), freqs, threshold_db)


# ---------------------------------------------------------------------------
# export / import
# ---------------------------------------------------------------------------

def save_waveform(u: Waveform, basepath) -> tuple[Path, Path]:
    """Write `<base>.iq` (interleaved little-endian float64 re,im) plus a
    `<base>.hdr` text sidecar describing rate, duration, band and layout."""
    base = Path(basepath)
    iq_path = base.with_suffix(".iq")
    hdr_path = base.with_suffix(".hdr")
    inter = np.empty(2 * len(u), np.float64)
    inter[0::2] = u.samples.real
    inter[1::2] = u.samples.imag
    inter.astype("<f8").tofile(iq_path)
    lay = u.layout
    lay_doc = None
    if lay is not None:
        lay_doc = {
            "kind": lay.kind,
            "bits_per_symbol": lay.bits_per_symbol,
            "n_subcarriers": lay.n_subcarriers,
            "n_symbols": lay.n_symbols,
            "pilot_mask": None if lay.pilot_mask is None
            else lay.pilot_mask.astype(int).tolist(),
            "active_subcarriers": list(lay.active_subcarriers),
            "data_bits": lay.data_bits.tolist(),
            "oversampling": lay.oversampling,
        }
    with open(hdr_path, "w", encoding="utf-8") as f:
        f.write("format: isaclab-waveform v1\n")
        f.write("byte-order: little-endian\n")
        f.write(f"sample-rate: {u.sample_rate!r}\n")
        f.write(f"duration: {u.duration!r}\n")
        f.write(f"band: {u.band[0]!r} {u.band[1]!r}\n")
        f.write(f"layout: {json.dumps(lay_doc)}\n")
    return iq_path, hdr_path


def load_waveform(basepath) -> Waveform:
    base = Path(basepath)
    hdr = {}
    for line in base.with_suffix(".hdr").read_text(encoding="utf-8").splitlines():
        key, _, val = line.partition(":")
        hdr[key.strip()] = val.strip()
    raw = np.fromfile(base.with_suffix(".iq"), dtype="<f8")
    samples = raw[0::2] + 1j * raw[1::2]
    lo, hi = (float(x) for x in hdr["band"].split())
    lay_doc = json.loads(hdr["layout"])
    layout = None
    if lay_doc is not None:
        mask = lay_doc["pilot_mask"]
        layout = ModulationLayout(
            kind=lay_doc["kind"],
            bits_per_symbol=lay_doc["bits_per_symbol"],
            n_subcarriers=lay_doc["n_subcarriers"],
            n_symbols=lay_doc["n_symbols"],
            pilot_mask=None if mask is None else np.asarray(mask, bool),
            active_subcarriers=tuple(lay_doc["active_subcarriers"]),
            data_bits=np.asarray(lay_doc["data_bits"], np.uint8),
            oversampling=lay_doc["oversampling"],
        )
    return Waveform(samples, float(hdr["sample-rate"]), (lo, hi), layout)
