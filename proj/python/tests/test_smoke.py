import math

import numpy as np
import pytest

import dragan


def test_residual_attention_closed_forms():
    rng = np.random.default_rng(0)
    fc = rng.uniform(-2, 2, size=(1, 3, 4, 4))
    np.testing.assert_array_equal(dragan.residual_attention(fc, np.zeros_like(fc)), 1.5 * fc)
    np.testing.assert_allclose(dragan.residual_attention(fc, np.full_like(fc, 30.0)), 2 * fc, rtol=1e-6)


def test_mask_schedule():
    first = dragan.make_mask(40, 40, 20, iteration=0, ramp=100)
    assert first.shape == (80, 80)
    assert (first == 1).all()
    late = dragan.make_mask(40, 40, 20, iteration=100, ramp=100)
    assert late[40, 40] == 1.0
    assert late[0, 0] == pytest.approx(0.1)
    coarse = dragan.make_mask(40, 40, 20, iteration=100, size=20, ramp=100)
    assert coarse.shape == (20, 20)


def test_config_round_trip():
    text = dragan.default_config()
    assert "lambda = 10" in text
    assert dragan.parse_config(text) == text
    with pytest.raises(ValueError):
        dragan.parse_config("no_such_key = 1\n")


def test_gradcheck_ops():
    results = dragan.gradcheck("ops")
    assert results
    assert all(passed for _, _, _, passed in results)


def test_dataset_and_images(tmp_path):
    records = dragan.generate_dataset(tmp_path, seed=3, classes=2, scenes=2, categories=["blue_rectangle"])
    assert len(records) == 4
    assert dragan.read_manifest(tmp_path / "manifest.tsv") == records
    img = dragan.load_image(records[0]["path"])
    assert img.shape == (3, 80, 80)
    assert img.dtype == np.float32
    assert -1.0 <= img.min() and img.max() <= 1.0
    r = records[0]
    assert math.isinf(dragan.background_psnr(img, img, r["cx"], r["cy"], r["r"]))
    noisy = np.clip(img + 0.1, -1, 1).astype(np.float32)
    assert dragan.background_psnr(img, noisy, r["cx"], r["cy"], r["r"]) > 20

    out = tmp_path / "copy.png"
    dragan.save_image(img, out)
    np.testing.assert_array_equal(dragan.load_image(out), img)


def test_manifest_error_names_the_line(tmp_path):
    (tmp_path / "manifest.tsv").write_text("garbage\n")
    with pytest.raises(ValueError, match="line 1"):
        dragan.read_manifest(tmp_path / "manifest.tsv")


def test_missing_checkpoint_raises(tmp_path):
    with pytest.raises(Exception):
        dragan.Model.load(tmp_path / "absent.ckpt")
