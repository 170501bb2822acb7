import numpy as np
import pytest

from spikeid import ann, snn, spectra
from spikeid.transforms import apply_input_transform


@pytest.fixture(scope="session")
def small_setup():
    """512-bin dataset with a trained classifier and converted network,
    shared by the snn tests (the acceptance suite builds its own)."""
    templates, ambient = spectra.load_templates()
    det = spectra.DetectorModel(n_calibrated_bins=512)
    grid = spectra.default_acq_grid()
    train, test = spectra.generate_dataset(templates, det, grid, per_cell=8,
                                           split=0.5, rng_seed=7, ambient=ambient)
    xtr_raw, ytr, names = spectra.dataset_arrays(train)
    xte_raw, yte, _ = spectra.dataset_arrays(test)
    model = ann.build_reference_architecture(512, len(names), scale=0.25, rng_seed=0)
    model.class_names = names
    xtr = apply_input_transform(model.input_transform, xtr_raw)
    model, trace = ann.train(model, xtr, ytr, ann.TrainConfig(epochs=15, rng_seed=0))
    net = snn.convert(model, xtr_raw[:48], snn.ConversionConfig(), snn.LIFParams())
    return {
        "det": det, "templates": templates, "ambient": ambient,
        "model": model, "net": net, "trace": trace, "class_names": names,
        "xtr_raw": xtr_raw, "ytr": ytr, "xte_raw": xte_raw, "yte": yte,
    }
