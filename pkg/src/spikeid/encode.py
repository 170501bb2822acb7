"""Entry points into the event domain.

Two converters: a multi-threshold level-crossing encoder that turns an
analog detector pulse into +/- threshold-crossing events, and a rate
coder that turns an energy histogram into Poisson spike trains (the
early-development substitute for real analog-to-event hardware).
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import ValidationError
from .spectra import EnergyHistogram


@dataclass(frozen=True)
class PulseModel:
    """Double-exponential SiPM-style pulse, v(t) = baseline +
    energy*volts_per_kev*(exp(-t/tau_d) - exp(-t/tau_r))."""

    tau_rise_us: float = 0.05
    tau_decay_us: float = 0.5
    volts_per_kev: float = 1e-3
    baseline_v: float = 0.0
    sample_rate_mhz: float = 200.0
    duration_us: float = 6.0

    def __post_init__(self):
        if not self.tau_rise_us > 0 or not self.tau_decay_us > self.tau_rise_us:
            raise ValidationError("need tau_decay > tau_rise > 0")
        if self.duration_us < 10 * self.tau_decay_us:
            raise ValidationError("duration must cover >= 10 decay constants")
        if not self.volts_per_kev > 0 or not self.sample_rate_mhz > 0:
            raise ValidationError("volts_per_kev and sample_rate must be > 0")

    @property
    def dt_us(self):
        return 1.0 / self.sample_rate_mhz

    @property
    def n_samples(self):
        return int(round(self.duration_us * self.sample_rate_mhz))

    @property
    def peak_time_us(self):
        tr, td = self.tau_rise_us, self.tau_decay_us
        return tr * td / (td - tr) * np.log(td / tr)

    @property
    def peak_shape(self):
        """Max of the unit shape exp(-t/tau_d) - exp(-t/tau_r)."""
        t = self.peak_time_us
        return np.exp(-t / self.tau_decay_us) - np.exp(-t / self.tau_rise_us)

    def peak_volts(self, energy_kev):
        return self.baseline_v + energy_kev * self.volts_per_kev * self.peak_shape


@dataclass(frozen=True)
class ThresholdBank:
    levels_v: tuple

    def __post_init__(self):
        levels = np.asarray(self.levels_v, dtype=float)
        if levels.size < 1:
            raise ValidationError("need at least one threshold level")
        if np.any(np.diff(levels) <= 0):
            raise ValidationError("threshold levels must be strictly increasing")

    @property
    def levels(self):
        return np.asarray(self.levels_v, dtype=float)

    @property
    def size(self):
        return len(self.levels_v)


def default_bank(model: PulseModel, e_lo_kev=30.0, e_hi_kev=3000.0, k=16):
    """K log-spaced levels spanning the pulse peak amplitudes of
    [e_lo, e_hi] keV; levels sit strictly above baseline."""
    energies = np.geomspace(e_lo_kev, e_hi_kev, k)
    levels = model.baseline_v + energies * model.volts_per_kev * model.peak_shape
    return ThresholdBank(levels_v=tuple(levels))


@dataclass(frozen=True)
class SpikeEvent:
    time_us: float
    channel: int
    polarity: int

    def __post_init__(self):
        if not np.isfinite(self.time_us) or self.time_us < 0:
            raise ValidationError("event time must be finite and non-negative")
        if self.polarity not in (-1, 1):
            raise ValidationError("polarity must be +1 or -1")
        if self.channel < 0:
            raise ValidationError("channel must be >= 0")


@dataclass
class EventStream:
    """Events sorted by time, ties broken by channel then polarity
    (ascending, so -1 sorts before +1)."""

    events: list

    def __post_init__(self):
        self.events = sorted(self.events,
                             key=lambda e: (e.time_us, e.channel, e.polarity))

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)


def synth_pulse(energy_kev, model: PulseModel):
    """Sampled waveform of a single pulse; amplitude linear in energy."""
    if energy_kev < 0:
        raise ValidationError("energy must be >= 0")
    t = np.arange(model.n_samples) * model.dt_us
    shape = np.exp(-t / model.tau_decay_us) - np.exp(-t / model.tau_rise_us)
    return model.baseline_v + energy_kev * model.volts_per_kev * shape


def threshold_encode(waveform, bank: ThresholdBank, model: PulseModel):
    """Level-crossing events: +1 where the waveform crosses a level
    upward (prev < level <= cur), -1 on the downward crossing. Event
    time is the crossing sample's time (no sub-sample interpolation)."""
    v = np.asarray(waveform, dtype=float)
    if v.size == 0:
        raise ValidationError("waveform is empty")
    if bank.levels[0] <= model.baseline_v:
        raise ValidationError("threshold levels must sit above the baseline")
    events = []
    prev, cur = v[:-1], v[1:]
    times = (np.arange(v.size - 1) + 1) * model.dt_us
    for ch, level in enumerate(bank.levels):
        up = np.nonzero((prev < level) & (cur >= level))[0]
        down = np.nonzero((prev >= level) & (cur < level))[0]
        events.extend(SpikeEvent(times[i], ch, 1) for i in up)
        events.extend(SpikeEvent(times[i], ch, -1) for i in down)
    return EventStream(events)


@dataclass(frozen=True)
class DecodedEnergy:
    energy_kev: float
    below_first_threshold: bool


def decode_energy(stream: EventStream, bank: ThresholdBank, model: PulseModel):
    """Energy estimate from a single pulse's crossing events.

    The peak amplitude is bracketed between the highest crossed level
    and the next one; the estimate is their midpoint (the top level
    extrapolates by the last inter-level gap)."""
    crossed = [e.channel for e in stream.events if e.polarity == 1]
    if not crossed:
        return DecodedEnergy(0.0, True)
    k = max(crossed)
    levels = bank.levels
    if k + 1 < bank.size:
        amp = 0.5 * (levels[k] + levels[k + 1])
    elif bank.size >= 2:
        gap = levels[-1] - levels[-2]
        amp = levels[-1] + 0.5 * gap
    else:
        amp = 1.5 * levels[-1] - 0.5 * model.baseline_v
    energy = (amp - model.baseline_v) / (model.volts_per_kev * model.peak_shape)
    return DecodedEnergy(energy, False)


@dataclass
class RateCode:
    rates_hz: np.ndarray
    max_rate_hz: float

    def __post_init__(self):
        self.rates_hz = np.asarray(self.rates_hz, dtype=float)
        if not self.max_rate_hz > 0:
            raise ValidationError("max_rate_hz must be > 0")
        if np.any(self.rates_hz < 0) or np.any(self.rates_hz > self.max_rate_hz):
            raise ValidationError("rates must lie in [0, max_rate_hz]")


def histogram_to_rates(hist, max_rate_hz=1000.0):
    """Per-histogram max normalization: the peak bin maps to max_rate.
    Scale-invariant; an all-zero histogram maps to all-zero rates."""
    counts = hist.counts if isinstance(hist, EnergyHistogram) else np.asarray(hist)
    if max_rate_hz <= 0:
        raise ValidationError("max_rate_hz must be > 0")
    counts = counts.astype(float)
    peak = counts.max() if counts.size else 0.0
    rates = np.zeros_like(counts) if peak <= 0 else max_rate_hz * counts / peak
    return RateCode(rates_hz=rates, max_rate_hz=max_rate_hz)


def poisson_spike_train(rate_hz, duration_ms, dt_ms, rng_seed):
    """Bernoulli-per-step Poisson approximation; spike probability per
    step is rate*dt/1000 (allowed up to exactly 1). Returns spike times
    in ms, deterministic per seed."""
    if rate_hz < 0:
        raise ValidationError("rate must be >= 0")
    if dt_ms <= 0 or duration_ms <= 0:
        raise ValidationError("dt and duration must be > 0")
    p = rate_hz * dt_ms / 1000.0
    if p > 1.0:
        raise ValidationError(
            f"rate*dt = {rate_hz * dt_ms:g} exceeds 1000 (spike probability > 1)")
    n = int(round(duration_ms / dt_ms))
    if p == 0.0:
        return np.empty(0)
    rng = np.random.default_rng(rng_seed)
    hits = rng.random(n) < p
    return np.nonzero(hits)[0] * dt_ms


def histogram_to_event_stream(hist, presentation_ms, max_rate_hz, rng_seed,
                              dt_ms=1.0):
    """Rate-code a histogram and stretch it into one merged event
    stream (channel = bin index, polarity = +1). Per-bin trains use
    seeds derived from (root seed, bin) so parallel generation equals
    serial."""
    if presentation_ms <= 0:
        raise ValidationError("presentation must be > 0")
    code = histogram_to_rates(hist, max_rate_hz)
    events = []
    root = int(rng_seed)
    for ch, rate in enumerate(code.rates_hz):
        if rate == 0.0:
            continue
        seed = np.random.SeedSequence((root, ch))
        times_ms = poisson_spike_train(rate, presentation_ms, dt_ms, seed)
        events.extend(SpikeEvent(t * 1000.0, ch, 1) for t in times_ms)
    return EventStream(events)


def write_event_csv(path, stream: EventStream):
    """Event stream file: `time_us,channel,polarity`, sorted."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["time_us", "channel", "polarity"])
        for e in stream:
            writer.writerow([repr(float(e.time_us)), e.channel, e.polarity])


def read_event_csv(path):
    events = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["time_us", "channel", "polarity"]:
            raise ValidationError(f"{path}: not an event stream CSV")
        for row in reader:
            events.append(SpikeEvent(float(row[0]), int(row[1]), int(row[2])))
    return EventStream(events)
