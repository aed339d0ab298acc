"""
Trained FLGuard state and its versioned binary encoding.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from flguard.contrastive import ContrastiveModel
from flguard.preprocessing import FeatureSelector, MaxAbsScaler, Scaler
from nn.network import Layer, ModelParameters
from utils.errors import ConfigurationError, InputError

ASSETS_FORMAT_VERSION = 1
_BRANCHES = ("lv", "rd")


@dataclass
class FLGuardAssets:
    model_lv: ContrastiveModel
    model_rd: ContrastiveModel
    selector_lv: FeatureSelector
    selector_rd: FeatureSelector
    scaler: Scaler
    trained_at_round: int
    losses_lv: list[float] = field(default_factory=list)
    losses_rd: list[float] = field(default_factory=list)

    def __post_init__(self):
        for branch in _BRANCHES:
            selector = getattr(self, f"selector_{branch}")
            model = getattr(self, f"model_{branch}")
            scaler: MaxAbsScaler = getattr(self.scaler, branch)
            if not (selector.width == model.width == scaler.max_abs.size):
                raise ConfigurationError(
                    f"FLGuard {branch} branch is inconsistent: selector {selector.width}, "
                    f"model {model.width}, scaler {scaler.max_abs.size}"
                )
        if self.selector_lv.source_dim != self.selector_rd.source_dim:
            raise ConfigurationError("FLGuard selectors were fitted on different dimensions")

    @property
    def source_dim(self) -> int:
        return self.selector_lv.source_dim

    def preprocess(self, branch: str, rows: np.ndarray) -> np.ndarray:
        selector: FeatureSelector = getattr(self, f"selector_{branch}")
        scaler: MaxAbsScaler = getattr(self.scaler, branch)
        return scaler.transform(selector.apply(rows))


def serialize_assets(assets: FLGuardAssets) -> bytes:
    arrays = {
        "format_version": np.array(ASSETS_FORMAT_VERSION),
        "trained_at_round": np.array(assets.trained_at_round),
    }
    for branch in _BRANCHES:
        selector: FeatureSelector = getattr(assets, f"selector_{branch}")
        model: ContrastiveModel = getattr(assets, f"model_{branch}")
        arrays[f"{branch}_indices"] = selector.indices
        arrays[f"{branch}_source_dim"] = np.array(selector.source_dim)
        arrays[f"{branch}_max_abs"] = getattr(assets.scaler, branch).max_abs
        arrays[f"{branch}_losses"] = np.asarray(getattr(assets, f"losses_{branch}"), dtype=np.float64)
        arrays[f"{branch}_activations"] = np.array([l.activation for l in model.encoder.layers])
        arrays[f"{branch}_alphas"] = np.array([l.alpha for l in model.encoder.layers])
        for i, layer in enumerate(model.encoder.layers):
            arrays[f"{branch}_w{i}"] = layer.weight
            arrays[f"{branch}_b{i}"] = layer.bias
    buffer = io.BytesIO()
    np.savez(buffer, **arrays)
    return buffer.getvalue()


def deserialize_assets(blob: bytes) -> FLGuardAssets:
    try:
        data = np.load(io.BytesIO(blob), allow_pickle=False)
    except (ValueError, OSError, EOFError) as e:
        raise InputError(f"Not an FLGuard assets blob: {e}") from e

    with data:
        version = int(data["format_version"]) if "format_version" in data.files else None
        if version != ASSETS_FORMAT_VERSION:
            raise InputError(
                f"Unsupported FLGuard assets version {version}, expected {ASSETS_FORMAT_VERSION}"
            )
        parts = {}
        for branch in _BRANCHES:
            activations = [str(a) for a in data[f"{branch}_activations"]]
            alphas = [float(a) for a in data[f"{branch}_alphas"]]
            layers = [
                Layer(
                    data[f"{branch}_w{i}"].copy(),
                    data[f"{branch}_b{i}"].copy(),
                    activations[i],
                    alphas[i],
                )
                for i in range(len(activations))
            ]
            parts[branch] = (
                ContrastiveModel(encoder=ModelParameters(layers)),
                FeatureSelector(
                    "low_variance" if branch == "lv" else "random",
                    data[f"{branch}_indices"].copy(),
                    int(data[f"{branch}_source_dim"]),
                ),
                MaxAbsScaler(data[f"{branch}_max_abs"].copy()),
                data[f"{branch}_losses"].tolist(),
            )
        trained_at = int(data["trained_at_round"])

    return FLGuardAssets(
        model_lv=parts["lv"][0],
        model_rd=parts["rd"][0],
        selector_lv=parts["lv"][1],
        selector_rd=parts["rd"][1],
        scaler=Scaler(lv=parts["lv"][2], rd=parts["rd"][2]),
        trained_at_round=trained_at,
        losses_lv=parts["lv"][3],
        losses_rd=parts["rd"][3],
    )
