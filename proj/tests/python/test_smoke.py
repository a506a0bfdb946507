import os
import pathlib

import numpy as np
import pytest

import wmevade

DESK = pathlib.Path(os.environ.get("WMEVADE_DESK_DIR", pathlib.Path(__file__).parents[1] / "data" / "desk"))


@pytest.fixture(scope="module")
def image():
    return wmevade.load_image(DESK / "desk_000.png")


def test_load_image_shape(image):
    assert image.dtype == np.uint8
    assert image.shape == (64, 64, 3)


@pytest.mark.parametrize("kind", ["lsb", "dwtdctsvd", "spectral"])
def test_round_trip(image, kind):
    codec = wmevade.CodecConfig(kind)
    w = wmevade.random_message(32, seed=3)
    marked = wmevade.embed(image, w, codec)
    assert marked.shape == image.shape
    assert wmevade.decode(marked, codec) == w
    assert wmevade.detect(marked, w, codec, 0.75)["detected"]
    assert wmevade.psnr(marked, image) >= 35.0


def test_hex_messages():
    w = wmevade.message_from_hex("deadbeef")
    assert len(w) == 32
    assert wmevade.message_to_hex(w) == "deadbeef"


def test_metrics(image):
    assert wmevade.psnr(image, image) == float("inf")
    assert wmevade.ssim(image, image) == pytest.approx(1.0)
    brighter = np.clip(image.astype(int) + 1, 0, 255).astype(np.uint8)
    assert wmevade.quantile_diff(image, brighter, 0.9) <= 1.0


def test_gray_arrays_round_trip():
    gray = np.random.default_rng(0).integers(0, 256, size=(64, 64), dtype=np.uint8)
    codec = wmevade.CodecConfig("lsb")
    w = wmevade.random_message(32, seed=1)
    out = wmevade.embed(gray, w, codec)
    assert out.shape == (64, 64)
    assert wmevade.decode(out, codec) == w


def test_errors(image):
    with pytest.raises(ValueError):
        wmevade.CodecConfig("rivagan")
    with pytest.raises(ValueError):
        wmevade.embed(image[:8, :8], wmevade.random_message(32), wmevade.CodecConfig("dwtdctsvd"))
    with pytest.raises(OSError):
        wmevade.load_image(DESK / "missing.png")


def test_baseline_and_best_evasion(image):
    codec = wmevade.CodecConfig("spectral")
    w = wmevade.random_message(32, seed=7)
    marked = wmevade.embed(image, w, codec)
    candidates = [wmevade.apply_baseline("noise", marked, s, seed=1) for s in (0.01, 0.3, 0.6)]
    idx = wmevade.best_evasion(candidates, marked, w, codec, 0.75)
    assert idx is None or not wmevade.detect(candidates[idx], w, codec, 0.75)["detected"]
    assert wmevade.best_evasion([marked], marked, w, codec, 0.75) is None


def test_run_evasion_trace(image):
    codec = wmevade.CodecConfig("lsb")
    w = wmevade.random_message(32, seed=2)
    marked = wmevade.embed(image, w, codec)
    trace = wmevade.run_evasion(marked, iterations=20, stride=10, clean=image, message=w, codec=codec,
                                fbe=True, snapshots=True)
    assert [r["iteration"] for r in trace] == [10, 20]
    assert len(trace[0]["fbe"]) == 5
    assert trace[1]["image"].shape == image.shape
    assert trace[1]["loss"] < trace[0]["loss"]
    assert trace[1]["bit_accuracy"] is not None


def test_run_benchmark(tmp_path):
    cfg = {
        "corpus": str(DESK),
        "max_images": 2,
        "codecs": ["lsb"],
        "gammas": [0.75],
        "methods": [{"method": "jpeg", "lo": 50, "hi": 100, "step": 25}],
    }
    rep = wmevade.run_benchmark(cfg, out=str(tmp_path))
    assert len(rep["cells"]) == 1
    assert len(rep["rates"]) == 1
    assert len(rep["outcomes"]) == 2
    assert rep["rates"][0]["tpr"] == 1.0
    assert (tmp_path / "report.csv").exists()
    with pytest.raises(ValueError):
        wmevade.run_benchmark({"gammas": [2]})


def test_default_config():
    cfg = wmevade.default_config()
    assert cfg["gammas"] == [0.55, 0.65, 0.75, 0.85]
