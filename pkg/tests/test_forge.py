import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import synth
from figforge import forge, raster
from figforge.errors import ForgeryError
from figforge.raster import GeometricTransform


@pytest.fixture
def scene():
    return synth.small_source(3, size=(80, 60))


def _unchanged_outside(out, img):
    m = out.gt > 0
    if out.gt_secondary is not None:
        m |= out.gt_secondary > 0
    return np.array_equal(out.image[~m], img[~m])


def test_blur_keeps_constant_object_and_marks_targets():
    img = np.full((20, 20, 3), 50, np.uint8)
    img[5:10, 5:10] = 200
    obj = np.zeros((20, 20), np.int32)
    obj[5:10, 5:10] = 1
    out = forge.retouch_blur(img, obj, [1], 2.0)
    assert np.array_equal(out.image, img)
    assert np.array_equal(out.gt, obj)
    assert out.modality == "blurring"


def test_blur_smooths_texture(scene):
    img, obj = scene
    out = forge.retouch_blur(img, obj, [1], 3.0)
    inside = obj == 1
    assert out.image[inside].std() < img[inside].std()
    assert _unchanged_outside(out, img)


def test_contrast_rounds_half_up_and_clamps():
    img = np.array([[[10], [200]]], np.uint8)
    out = forge.adjust_contrast(img, np.ones((1, 2), bool), 1.5, 0.0)
    assert out[0, :, 0].tolist() == [15, 255]


def test_retouch_gt_ids_follow_target_order(scene):
    img, obj = scene
    out = forge.retouch_contrast(img, obj, [2, 1], 1.2, 10)
    assert np.array_equal(out.gt == 1, obj == 2)
    assert np.array_equal(out.gt == 2, obj == 1)


def test_unknown_object_rejected(scene):
    img, obj = scene
    with pytest.raises(ForgeryError):
        forge.retouch_blur(img, obj, [9], 2.0)


def test_brute_force_covers_object_with_background(scene):
    img, obj = scene
    out = forge.clean_brute_force(img, obj, 1)
    assert set(np.unique(out.gt)) == {0, 1}
    assert set(np.unique(out.gt_secondary)) == {0, 2}
    assert not ((out.gt_secondary > 0) & (obj > 0)).any()
    assert (out.gt_secondary > 0).sum() == (obj == 1).sum()
    assert _unchanged_outside(out, img)


def test_brute_force_fails_without_background():
    img = np.zeros((8, 8, 3), np.uint8)
    obj = np.ones((8, 8), np.int32)
    obj[:, 4:] = 2
    with pytest.raises(ForgeryError, match="no background"):
        forge.clean_brute_force(img, obj, 1)


def test_inpaint_marks_only_target(scene):
    img, obj = scene
    out = forge.clean_inpaint(img, obj, 2)
    assert np.array_equal(out.gt > 0, obj == 2)
    assert _unchanged_outside(out, img)


def test_copy_move_gt_has_two_components(scene):
    img, obj = scene
    out = forge.copy_move_placed(img, obj, 1, [GeometricTransform.flip()], None, 5)
    assert raster.count_components(out.gt) == {1: 2}


def test_copy_move_guards():
    img, obj = synth.small_source(1)
    with pytest.raises(ForgeryError, match="nonempty"):
        forge.copy_move(img, obj, 1, [])
    with pytest.raises(ForgeryError, match="combined"):
        forge.copy_move(img, obj, 1, [GeometricTransform.scaling(1.5)])
    with pytest.raises(ForgeryError, match="touches"):
        forge.copy_move(img, obj, 1, [GeometricTransform.translation(1, 0)])


def test_copy_move_post_retouch_stays_inside_copy(scene):
    img, obj = scene
    spec = forge.RetouchSpec("contrast", gain=1.3, bias=5)
    out = forge.copy_move_placed(img, obj, 1, [], spec, 2)
    assert out.params["post"] == spec.to_dict()
    assert _unchanged_outside(out, img)


def test_random_copy_move_tags_submodality(scene):
    img, obj = scene
    out = forge.copy_move_random(img, obj, 4)
    assert out.params["submodality"] == "random"
    assert raster.count_components(out.gt)[1] == 2


@settings(max_examples=40, deadline=None)
@given(st.floats(0.1, 0.9), st.integers(0, 1000))
def test_overlap_fraction_within_tolerance(frac, seed):
    img, _ = synth.small_source(seed % 5)
    try:
        pair = forge.overlap_split(img, (40, 30), frac, None, seed)
    except ForgeryError:
        return
    assert abs(pair.params["actual_fraction"] - frac) <= 0.05 + 1e-12
    assert pair.crop_a != pair.crop_b
    assert (pair.gt_a > 0).sum() == (pair.gt_b > 0).sum()
    ax0, ay0, _, _ = pair.crop_a
    bx0, by0, _, _ = pair.crop_b
    ys, xs = np.nonzero(pair.gt_a)
    assert np.array_equal(pair.image_a[ys, xs], pair.image_b[ys + ay0 - by0, xs + ax0 - bx0])


def test_overlap_rejects_infeasible_geometry():
    img = np.zeros((10, 10, 3), np.uint8)
    with pytest.raises(ForgeryError):
        forge.overlap_split(img, (10, 10), 0.5)


def test_splice_places_donor_on_host_background():
    host, hobj = synth.small_source(1)
    donor, dobj = synth.small_source(2)
    out = forge.splice(host, hobj, donor, dobj, 1, 3)
    assert (out.gt > 0).sum() == (dobj == 1).sum()
    assert not ((out.gt > 0) & (hobj > 0)).any()
    assert np.array_equal(out.image[out.gt == 0], host[out.gt == 0])


def test_registry_extension_round_trip():
    @forge.register_forgery("test_invert", "retouching")
    def invert(image, objects, seed, ranges):
        m = objects > 0
        out = image.copy()
        out[m] = 255 - out[m]
        return forge.ForgeryOutput(out, m.astype(np.int32), "test_invert", {}, seed)

    try:
        img, obj = synth.small_source(0)
        out = forge.get_forgery("test_invert")(img, obj, 0, forge.ParameterRanges())
        assert forge.TAXONOMY["test_invert"] == "retouching"
        assert _unchanged_outside(out, img)
        with pytest.raises(ValueError):
            forge.register_forgery("test_invert", "retouching")(invert)
    finally:
        forge.RECIPES.pop("test_invert", None)
        forge.TAXONOMY.pop("test_invert", None)


def test_unknown_recipe():
    with pytest.raises(KeyError):
        forge.get_forgery("nope")


def test_sample_scale_avoids_excluded_band():
    rng = np.random.default_rng(0)
    r = forge.ParameterRanges()
    for _ in range(200):
        s = forge.sample_scale(rng, r)
        assert 0.5 <= s <= 2.0 and not 0.95 <= s <= 1.05


def test_parameter_ranges_round_trip():
    r = forge.ParameterRanges(sigma=(1.0, 2.0), patch_radius=3)
    assert forge.ParameterRanges.from_dict(r.to_dict()) == r
