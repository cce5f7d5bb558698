"""Versioned ``.npz`` model files.

Arrays: ``format_version``, ``meta`` (JSON string), ``norm_mean``,
``norm_std``, ``norm_keep``, ``layer{i}_W``, ``layer{i}_b``, ``head_w``,
``head_b``. ``meta`` holds the model config, feature names, target scaling
and training summary.
"""

import json
from pathlib import Path
from typing import Any

import numpy as np

from ledgertopo.forecaster.lstm import LSTMParams
from ledgertopo.forecaster.training import ModelConfig, Normalizer, TrainedModel
from ledgertopo.utils.exceptions import ModelFormatError
from ledgertopo.utils.logging import get_logger
from ledgertopo.utils.paths import ensure_parent

logger = get_logger(__name__)

FORMAT_VERSION = 1


def save_model(model: TrainedModel, path: Path) -> Path:
    """Write ``model`` to ``path`` (the ``.npz`` suffix is added if missing)."""
    path = Path(path)
    if path.suffix != ".npz":
        path = path.with_suffix(".npz")
    meta: dict[str, Any] = {
        "config": model.config.to_dict(),
        "seed": model.seed,
        "feature_names": list(model.feature_names),
        "kept_features": list(model.kept_features),
        "target_mean": model.target_mean,
        "target_scale": model.target_scale,
        "epochs_run": model.epochs_run,
        "best_val_loss": model.best_val_loss,
        "extra": model.meta,
    }
    arrays = {
        "format_version": np.array(FORMAT_VERSION),
        "meta": np.array(json.dumps(meta, sort_keys=True)),
        "norm_mean": model.normalizer.mean,
        "norm_std": model.normalizer.std,
        "norm_keep": model.normalizer.keep,
        "head_w": model.params.head_w,
        "head_b": model.params.head_b,
    }
    for i, (w, b) in enumerate(zip(model.params.weights, model.params.biases)):
        arrays[f"layer{i}_W"] = w
        arrays[f"layer{i}_b"] = b
    ensure_parent(path)
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.debug(f"Saved model (seed {model.seed}) to {path}")
    return path


def load_model(path: Path) -> TrainedModel:
    """Read a model written by :func:`save_model`.

    Raises:
        ModelFormatError: If the file is not a model or has an unknown version
    """
    try:
        archive = np.load(Path(path), allow_pickle=False)
    except (OSError, ValueError) as e:
        raise ModelFormatError(f"Cannot read model file {path}: {e}") from e

    with archive:
        if "format_version" not in archive.files:
            raise ModelFormatError(f"{path} is not a model file (no format_version)")
        version = int(archive["format_version"])
        if version != FORMAT_VERSION:
            raise ModelFormatError(
                f"Unsupported model format version {version} in {path}",
                suggestions=[f"This release reads version {FORMAT_VERSION}"],
            )
        try:
            meta = json.loads(str(archive["meta"]))
            config = ModelConfig(**meta["config"])
            layers = config.layers
            params = LSTMParams(
                weights=[archive[f"layer{i}_W"] for i in range(layers)],
                biases=[archive[f"layer{i}_b"] for i in range(layers)],
                head_w=archive["head_w"],
                head_b=archive["head_b"],
            )
            normalizer = Normalizer(
                mean=archive["norm_mean"],
                std=archive["norm_std"],
                keep=archive["norm_keep"].astype(bool),
            )
        except (KeyError, TypeError, ValueError) as e:
            raise ModelFormatError(f"Model file {path} is incomplete: {e}") from e

    if not params.all_finite():
        raise ModelFormatError(f"Model file {path} holds non-finite parameters")
    return TrainedModel(
        params=params,
        normalizer=normalizer,
        config=config,
        feature_names=tuple(meta["feature_names"]),
        target_mean=float(meta["target_mean"]),
        target_scale=float(meta["target_scale"]),
        epochs_run=int(meta["epochs_run"]),
        best_val_loss=meta["best_val_loss"],
        meta=meta.get("extra", {}),
    )
