"""JSON documents: device configs, design targets/spaces, run manifests."""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from typing import Any

from .design import DesignSpace, TargetDistribution
from .errors import SchemaError
from .model import ChannelParams, PulseSpec, RouterConfig

CONFIG_KEYS = {"channels", "carrier_k", "epsilon"}
CHANNEL_KEYS = ("omega", "gamma_minus", "gamma_plus")
TARGET_KEYS = {"p_back", "p_out"}
SPACE_KEYS = {"n_channels", "delta_max", "gamma_max", "k", "frozen"}


def _load(text_or_obj):
    if isinstance(text_or_obj, (str, bytes)):
        try:
            return json.loads(text_or_obj)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc}") from None
    return text_or_obj


def _number(value, path):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"{path} must be a number, got {type(value).__name__}")
    value = float(value)
    if not math.isfinite(value):
        raise ValueError(f"{path} must be finite")
    return value


def _object(doc, path, allowed, required):
    if not isinstance(doc, dict):
        raise SchemaError(f"{path or 'document'} must be a JSON object")
    unknown = sorted(set(doc) - set(allowed))
    if unknown:
        raise SchemaError(f"unknown key {path + '.' if path else ''}{unknown[0]}")
    for key in required:
        if key not in doc:
            raise SchemaError(f"missing required key {path + '.' if path else ''}{key}")


def parse_config(text) -> tuple[RouterConfig, PulseSpec]:
    """Validate a device document and build (RouterConfig, PulseSpec).

    Schema::

        {"channels": [{"omega": r, "gamma_minus": r>=0, "gamma_plus": r>=0}, ...],
         "carrier_k": r, "epsilon": r>0}

    ``carrier_k`` is both the probe frequency and the pulse carrier and
    defaults to 0.
    """
    doc = _load(text)
    _object(doc, "", CONFIG_KEYS, ("channels", "epsilon"))
    channels = doc["channels"]
    if not isinstance(channels, list) or not channels:
        raise SchemaError("channels must be a non-empty list")
    parsed = []
    for i, ch in enumerate(channels):
        path = f"channels[{i}]"
        _object(ch, path, CHANNEL_KEYS, CHANNEL_KEYS)
        values = {key: _number(ch[key], f"{path}.{key}") for key in CHANNEL_KEYS}
        for key in ("gamma_minus", "gamma_plus"):
            if values[key] < 0:
                raise ValueError(f"{path}.{key} must be >= 0, got {values[key]}")
        parsed.append(ChannelParams(**values))
    carrier = _number(doc.get("carrier_k", 0.0), "carrier_k")
    epsilon = _number(doc["epsilon"], "epsilon")
    if epsilon <= 0:
        raise ValueError(f"epsilon must be > 0, got {epsilon}")
    return RouterConfig(tuple(parsed)), PulseSpec(carrier, epsilon)


def config_to_dict(config: RouterConfig, pulse: PulseSpec | None = None, carrier_k: float | None = None) -> dict:
    doc: dict[str, Any] = {"channels": [asdict(ch) for ch in config.channels]}
    if pulse is not None:
        doc["carrier_k"] = pulse.varpi
        doc["epsilon"] = pulse.epsilon
    elif carrier_k is not None:
        doc["carrier_k"] = carrier_k
    return doc


def parse_target(text) -> TargetDistribution:
    doc = _load(text)
    _object(doc, "", TARGET_KEYS, TARGET_KEYS)
    p_out = doc["p_out"]
    if not isinstance(p_out, list):
        raise SchemaError("p_out must be a list")
    return TargetDistribution(_number(doc["p_back"], "p_back"),
                              tuple(_number(p, f"p_out[{i}]") for i, p in enumerate(p_out)))


def parse_space(text, n_channels: int) -> DesignSpace:
    doc = _load(text) if text is not None else {}
    _object(doc, "", SPACE_KEYS, ())
    frozen = doc.get("frozen", {})
    if not isinstance(frozen, dict):
        raise SchemaError("frozen must be an object")
    n = int(doc.get("n_channels", n_channels))
    if n != n_channels:
        raise SchemaError(f"n_channels={n} does not match the target ({n_channels} channels)")
    return DesignSpace(
        n_channels=n,
        delta_max=_number(doc.get("delta_max", 10.0), "delta_max"),
        gamma_max=_number(doc.get("gamma_max", 10.0), "gamma_max"),
        k=_number(doc.get("k", 0.0), "k"),
        frozen={key: _number(v, f"frozen.{key}") for key, v in frozen.items()},
    )


@dataclass
class RunManifest:
    """Everything needed to replay one CLI invocation."""

    subcommand: str
    config: dict | None
    output: str | None
    grid: list = field(default_factory=list)
    version: str = ""
    rng_seed: int | None = None
    options: dict = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "RunManifest":
        doc = json.loads(text)
        allowed = {"subcommand", "config", "output", "grid", "version", "rng_seed", "options"}
        unknown = set(doc) - allowed
        if unknown:
            raise SchemaError(f"unknown manifest key {sorted(unknown)[0]}")
        return cls(**doc)
