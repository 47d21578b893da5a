"""Python front end to the DRMN engine.

Configs are plain dicts using the same keys as the CLI's JSON config
("train" and "ensemble" sections).
"""

import json

from ._drmn import (
    DrmnError,
    czsl_predict,
    ensemble_predict,
    gen_synthetic,
    gradcheck,
    harmonic_mean,
    load_dataset,
    per_class_top1,
    run_cli,
)
from . import _drmn

__all__ = [
    "DrmnError",
    "czsl_predict",
    "ensemble_predict",
    "evaluate",
    "fit",
    "gen_synthetic",
    "gradcheck",
    "harmonic_mean",
    "load_dataset",
    "per_class_top1",
    "run_cli",
]


def fit(data, train=None, ensemble=None, checkpoint=None):
    """Train on the dataset directory; returns per-epoch metric dicts."""
    return _drmn.fit(
        str(data),
        json.dumps(train or {}),
        json.dumps(ensemble or {}),
        str(checkpoint) if checkpoint else "",
    )


def evaluate(checkpoint, data, ensemble=None):
    """CZSL accuracy, GZSL U/S/H and per-class accuracy for a checkpoint."""
    return _drmn.evaluate(str(checkpoint), str(data), json.dumps(ensemble or {}))
