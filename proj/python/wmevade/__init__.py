"""Watermark embedding, detection and evasion on 8-bit images.

Images are numpy ``uint8`` arrays of shape ``(H, W)`` or ``(H, W, 3)``.
Messages are lists of 0/1 ints.
"""

import json

from ._core import (
    BenchmarkError,
    CodecConfig,
    CodecError,
    CodecKind,
    ConfigError,
    DivergenceError,
    EvasionMethod,
    ImageIOError,
    ShapeError,
    apply_baseline,
    best_evasion,
    decode,
    default_config_json,
    detect,
    embed,
    load_image,
    message_from_hex,
    message_to_hex,
    psnr,
    quantile_diff,
    random_message,
    run_evasion,
    save_image,
    ssim,
)
from ._core import run_benchmark as _run_benchmark

__all__ = [
    "BenchmarkError",
    "CodecConfig",
    "CodecError",
    "CodecKind",
    "ConfigError",
    "DivergenceError",
    "EvasionMethod",
    "ImageIOError",
    "ShapeError",
    "apply_baseline",
    "best_evasion",
    "decode",
    "default_config",
    "detect",
    "embed",
    "load_image",
    "message_from_hex",
    "message_to_hex",
    "psnr",
    "quantile_diff",
    "random_message",
    "run_benchmark",
    "run_evasion",
    "save_image",
    "ssim",
]


def default_config():
    """The default benchmark configuration as a dict."""
    return json.loads(default_config_json())


def run_benchmark(config=None, **overrides):
    """Runs a benchmark sweep.

    ``config`` is a dict (or JSON string) with the same keys as the CLI's
    ``sweep --config`` file; keyword arguments override individual keys.
    Returns a dict with ``cells``, ``rates`` and per-image ``outcomes``.
    """
    if config is None:
        config = {}
    elif isinstance(config, str):
        config = json.loads(config)
    config = {**config, **overrides}
    return _run_benchmark(json.dumps(config))

