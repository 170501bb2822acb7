"""Synthetic gamma-ray energy histograms.

Generates labeled spectra with the statistical structure of a handheld
scintillation measurement campaign: 6 source classes, a grid of
source-detector distances with an optional torso phantom, 1 s
integration frames, Gaussian detector broadening and Poisson counting
noise. Every physical constant here is an editable configuration
default (see data/templates_default.json).
"""

import csv
import json
from dataclasses import dataclass
from importlib import resources

import numpy as np
from scipy.special import erf

from .errors import ValidationError

DEFAULT_DISTANCES_M = (0.10, 0.25, 0.50, 1.0, 1.5)


@dataclass(frozen=True)
class EmissionLine:
    energy_kev: float
    relative_intensity: float

    def __post_init__(self):
        if not self.energy_kev > 0:
            raise ValidationError(f"line energy must be > 0, got {self.energy_kev}")
        if not 0 < self.relative_intensity <= 1:
            raise ValidationError(
                f"relative_intensity must be in (0, 1], got {self.relative_intensity}")


@dataclass(frozen=True)
class IsotopeTemplate:
    name: str
    lines: tuple
    continuum_amplitude: float
    continuum_decay_kev: float

    def __post_init__(self):
        if self.continuum_amplitude < 0:
            raise ValidationError("continuum_amplitude must be >= 0")
        if not self.continuum_decay_kev > 0:
            raise ValidationError("continuum_decay_kev must be > 0")
        if self.lines and not any(l.relative_intensity == 1.0 for l in self.lines):
            raise ValidationError(
                f"template {self.name}: at least one line must have relative_intensity 1")


@dataclass(frozen=True)
class DetectorModel:
    """Energy axis and resolution model.

    FWHM(E) = resolution_a*sqrt(E) + resolution_b, in keV. The default
    raw-channel map is linear over [e_min, e_max]. n_calibrated_bins can
    be shrunk (e.g. 512) to run the whole pipeline on a fast profile.
    """

    n_raw_channels: int = 4096
    n_calibrated_bins: int = 3238
    e_min_kev: float = 20.0
    e_max_kev: float = 3000.0
    resolution_a: float = 2.0
    resolution_b: float = 5.0

    def __post_init__(self):
        if not self.n_raw_channels >= self.n_calibrated_bins >= 1:
            raise ValidationError("need n_raw_channels >= n_calibrated_bins >= 1")
        if not self.e_max_kev > self.e_min_kev > 0:
            raise ValidationError("need e_max_kev > e_min_kev > 0")
        if self.fwhm(self.e_min_kev) <= 0 or self.fwhm(self.e_max_kev) <= 0:
            raise ValidationError("FWHM must be positive over the energy range")

    def fwhm(self, energy_kev):
        return self.resolution_a * np.sqrt(energy_kev) + self.resolution_b

    def raw_to_energy(self, channel):
        """Energy (keV) at raw channel center; strictly increasing."""
        frac = (np.asarray(channel, dtype=float) + 0.5) / self.n_raw_channels
        return self.e_min_kev + frac * (self.e_max_kev - self.e_min_kev)

    @property
    def bin_width_kev(self):
        return (self.e_max_kev - self.e_min_kev) / self.n_calibrated_bins

    @property
    def bin_edges_kev(self):
        return np.linspace(self.e_min_kev, self.e_max_kev, self.n_calibrated_bins + 1)

    @property
    def bin_centers_kev(self):
        edges = self.bin_edges_kev
        return 0.5 * (edges[:-1] + edges[1:])

    def energy_to_bin(self, energy_kev):
        idx = np.floor((np.asarray(energy_kev, dtype=float) - self.e_min_kev)
                       / self.bin_width_kev).astype(int)
        return np.clip(idx, 0, self.n_calibrated_bins - 1)


@dataclass(frozen=True)
class AcquisitionConfig:
    distance_m: float = 1.0
    phantom: bool = False
    integration_time_s: float = 1.0
    source_rate_ref: float = 20000.0
    phantom_attenuation: float = 0.7

    def __post_init__(self):
        if not self.distance_m > 0:
            raise ValidationError("distance_m must be > 0")
        if not self.integration_time_s > 0:
            raise ValidationError("integration_time_s must be > 0")
        if not self.source_rate_ref > 0:
            raise ValidationError("source_rate_ref must be > 0")
        if not 0 < self.phantom_attenuation <= 1:
            raise ValidationError("phantom_attenuation must be in (0, 1]")


@dataclass
class EnergyHistogram:
    counts: np.ndarray
    label: str | None = None
    meta: AcquisitionConfig | None = None

    def __post_init__(self):
        self.counts = np.asarray(self.counts)
        if self.counts.ndim != 1:
            raise ValidationError("counts must be a 1-D vector")
        if np.any(self.counts < 0):
            raise ValidationError("counts must be non-negative")


def load_templates(path=None):
    """Load a template set file; default is the packaged one.

    Returns (templates: dict name -> IsotopeTemplate, ambient: (IsotopeTemplate, rate_cps)).
    """
    if path is None:
        text = resources.files("spikeid.data").joinpath("templates_default.json").read_text()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"template file is not valid JSON: {exc}") from exc
    templates = {}
    for entry in doc["templates"]:
        lines = tuple(EmissionLine(l["energy_kev"], l["relative_intensity"])
                      for l in entry.get("lines", []))
        tpl = IsotopeTemplate(entry["name"], lines,
                              entry["continuum_amplitude"], entry["continuum_decay_kev"])
        if tpl.name in templates:
            raise ValidationError(f"duplicate template name {tpl.name}")
        templates[tpl.name] = tpl
    amb = doc.get("ambient")
    ambient = None
    if amb is not None:
        amb_tpl = templates.get(amb["template"])
        if amb_tpl is None:
            raise ValidationError(f"ambient template {amb['template']!r} not in set")
        ambient = (amb_tpl, float(amb["rate_cps"]))
    return templates, ambient


def _template_shape(template: IsotopeTemplate, det: DetectorModel):
    """Unit-area expected spectrum of a template (per calibrated bin)."""
    edges = det.bin_edges_kev
    shape = np.zeros(det.n_calibrated_bins)
    for line in template.lines:
        if not det.e_min_kev <= line.energy_kev <= det.e_max_kev:
            raise ValidationError(
                f"template {template.name}: line at {line.energy_kev} keV outside "
                f"[{det.e_min_kev}, {det.e_max_kev}] keV")
        sigma = det.fwhm(line.energy_kev) / 2.355
        z = (edges - line.energy_kev) / (np.sqrt(2.0) * sigma)
        cdf = 0.5 * (1.0 + erf(z))
        shape += line.relative_intensity * np.diff(cdf)
    if template.continuum_amplitude > 0:
        centers = det.bin_centers_kev
        shape += (template.continuum_amplitude
                  * np.exp(-centers / template.continuum_decay_kev)
                  * det.bin_width_kev)
    total = shape.sum()
    if total > 0:
        shape = shape / total
    return shape


def expected_spectrum(template, det, acq, ambient=None):
    """Expected counts per calibrated bin (Poisson means).

    Source term: unit-area template shape scaled by
    source_rate_ref * (0.10/distance)^2 * phantom_attenuation * time.
    ambient: optional (Background template, rate counts/s) added
    independently of geometry.
    """
    shape = _template_shape(template, det)
    scale = (acq.source_rate_ref
             * (0.10 / acq.distance_m) ** 2
             * (acq.phantom_attenuation if acq.phantom else 1.0)
             * acq.integration_time_s)
    lam = scale * shape
    if ambient is not None:
        amb_tpl, amb_rate = ambient
        lam = lam + amb_rate * acq.integration_time_s * _template_shape(amb_tpl, det)
    return lam


def sample_histogram(lam, rng_seed):
    """Draw Poisson counts for each bin; deterministic per seed."""
    lam = np.asarray(lam, dtype=float)
    if np.any(lam < 0):
        raise ValidationError("expected counts must be non-negative")
    rng = np.random.default_rng(rng_seed)
    counts = rng.poisson(lam)
    return EnergyHistogram(counts=counts.astype(np.int64))


def calibrate(raw_counts, det: DetectorModel):
    """Rebin raw channels into calibrated energy bins; exactly sum-preserving."""
    raw = np.asarray(raw_counts)
    if raw.shape != (det.n_raw_channels,):
        raise ValidationError(
            f"raw counts length {raw.shape} != n_raw_channels {det.n_raw_channels}")
    bins = det.energy_to_bin(det.raw_to_energy(np.arange(det.n_raw_channels)))
    counts = np.bincount(bins, weights=raw, minlength=det.n_calibrated_bins)
    return EnergyHistogram(counts=counts.astype(raw.dtype))


def _cell_seed(root_seed, class_idx, geom_idx, rep_idx):
    # Parallel dataset generation derives each cell's stream from this
    # tuple, so parallel output equals serial output.
    return np.random.SeedSequence((int(root_seed), class_idx, geom_idx, rep_idx))


def generate_dataset(templates, det, acq_grid, per_cell, split, rng_seed,
                     ambient=None):
    """Stratified labeled train/test histograms over (class x geometry) cells.

    Returns (train, test) lists of EnergyHistogram. Within each cell the
    first round(per_cell*split) replicates go to train; replicates are
    i.i.d. draws so the assignment carries no ordering bias.
    """
    if not templates:
        raise ValidationError("template set is empty")
    if len(templates) < 2:
        raise ValidationError("need at least 2 classes")
    if per_cell < 1:
        raise ValidationError("per_cell must be >= 1")
    if not 0 < split < 1:
        raise ValidationError("split must be in (0, 1)")
    names = sorted(templates)
    n_train = int(round(per_cell * split))
    train, test = [], []
    for class_idx, name in enumerate(names):
        tpl = templates[name]
        for geom_idx, acq in enumerate(acq_grid):
            lam = expected_spectrum(tpl, det, acq, ambient=ambient)
            for rep in range(per_cell):
                seed = _cell_seed(rng_seed, class_idx, geom_idx, rep)
                hist = sample_histogram(lam, seed)
                hist.label = name
                hist.meta = acq
                (train if rep < n_train else test).append(hist)
    return train, test


def default_acq_grid(distances=DEFAULT_DISTANCES_M, phantom=(False, True),
                     integration_time_s=1.0, source_rate_ref=20000.0,
                     phantom_attenuation=0.7):
    grid = []
    for d in distances:
        for ph in phantom:
            grid.append(AcquisitionConfig(distance_m=d, phantom=ph,
                                          integration_time_s=integration_time_s,
                                          source_rate_ref=source_rate_ref,
                                          phantom_attenuation=phantom_attenuation))
    return grid


def write_dataset_csv(path, histograms):
    """Dataset file: header `label,distance_m,phantom,integration_s,c0,...`."""
    if not histograms:
        raise ValidationError("no histograms to write")
    n = len(histograms[0].counts)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["label", "distance_m", "phantom", "integration_s"]
                        + [f"c{i}" for i in range(n)])
        for h in histograms:
            if len(h.counts) != n:
                raise ValidationError("inconsistent histogram lengths")
            meta = h.meta or AcquisitionConfig()
            writer.writerow([h.label, repr(meta.distance_m),
                             int(meta.phantom), repr(meta.integration_time_s)]
                            + [str(int(c)) for c in h.counts])


def read_dataset_csv(path):
    """Read a dataset CSV back into EnergyHistogram records."""
    hists = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:4] != ["label", "distance_m", "phantom", "integration_s"]:
            raise ValidationError(f"{path}: not a dataset CSV (bad header)")
        for row in reader:
            label, dist, phantom, integ = row[0], float(row[1]), bool(int(row[2])), float(row[3])
            counts = np.array([int(c) for c in row[4:]], dtype=np.int64)
            meta = AcquisitionConfig(distance_m=dist, phantom=phantom,
                                     integration_time_s=integ)
            hists.append(EnergyHistogram(counts=counts, label=label, meta=meta))
    if not hists:
        raise ValidationError(f"{path}: empty dataset")
    return hists


def dataset_arrays(histograms):
    """Stack a histogram list into (counts matrix, labels, class_names)."""
    class_names = sorted({h.label for h in histograms if h.label is not None})
    index = {name: i for i, name in enumerate(class_names)}
    x = np.stack([h.counts for h in histograms]).astype(float)
    y = np.array([index[h.label] for h in histograms], dtype=np.int64)
    return x, y, class_names
