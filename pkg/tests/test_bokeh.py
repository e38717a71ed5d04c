"""Depth-of-field blur: radius map, disc gather, full render."""

import numpy as np
import pytest

import akira_kit as ak
from akira_kit import ConfigError

BACKENDS = ["numpy", "numba"] if ak.HAVE_NUMBA else ["numpy"]


def brute_force_disc_blur(image, radius):
    """Literal per-pixel loop over the disc neighborhood; the oracle the
    fast kernels are checked against."""
    h, w, c = image.shape
    out = np.zeros_like(image)
    for y in range(h):
        for x in range(w):
            r = radius[y, x]
            reach = int(r + 0.5) + 1
            acc = np.zeros(c)
            wsum = 0.0
            for dy in range(-reach, reach + 1):
                for dx in range(-reach, reach + 1):
                    yy, xx = y + dy, x + dx
                    if not (0 <= yy < h and 0 <= xx < w):
                        continue
                    dist = np.hypot(dx, dy)
                    wgt = min(max(r - dist + 0.5, 0.0), 1.0)
                    if wgt <= 0.0:
                        continue
                    acc += wgt * image[yy, xx]
                    wsum += wgt
            out[y, x] = acc / wsum
    return out


# ---------------------------------------------------------------------------
# radius map

def test_radius_zero_at_focus_plane():
    disp = np.full((10, 10), 0.6)
    r = ak.blur_radius_map(disp, alpha=50.0, focus_u=4.0, focus_v=4.0)
    assert np.allclose(r, 0.0)


def test_radius_scales_with_alpha_and_disparity_gap():
    disp = np.zeros((8, 8))
    disp[2, 3] = 0.4  # focus lands here
    r = ak.blur_radius_map(disp, alpha=40.0, focus_u=3.0, focus_v=2.0)
    assert r[2, 3] == 0.0
    # |0.0 - 0.4| * 40 * 0.25 = 4 px everywhere else
    mask = np.ones((8, 8), bool)
    mask[2, 3] = False
    assert np.allclose(r[mask], 4.0)


def test_radius_capped():
    disp = np.zeros((4, 4))
    disp[0, 0] = 1.0
    r = ak.blur_radius_map(disp, alpha=100.0, focus_u=0.0, focus_v=0.0, gain=2.0, cap=9.0)
    assert r.max() == pytest.approx(9.0)


def test_radius_fractional_focus_rounds_to_pixel():
    disp = np.zeros((6, 6))
    disp[3, 2] = 0.5
    # focus (1.7, 3.2) rounds to pixel (2, 3)
    r = ak.blur_radius_map(disp, alpha=8.0, focus_u=1.7, focus_v=3.2)
    assert r[3, 2] == 0.0


def test_radius_rejects_out_of_range_disparity():
    with pytest.raises(ConfigError):
        ak.blur_radius_map(np.full((4, 4), 1.5), alpha=10.0, focus_u=0, focus_v=0)
    with pytest.raises(ConfigError):
        ak.blur_radius_map(np.full((4, 4), -0.2), alpha=10.0, focus_u=0, focus_v=0)


# ---------------------------------------------------------------------------
# disc blur

@pytest.mark.parametrize("backend", BACKENDS)
def test_disc_blur_matches_brute_force(backend, rng):
    img = rng.random((24, 20, 3))
    radius = rng.uniform(0.0, 5.0, size=(24, 20))
    radius[rng.random((24, 20)) < 0.2] = 0.0
    fast = ak.disc_blur(img, radius, backend=backend)
    slow = brute_force_disc_blur(img, radius)
    assert np.max(np.abs(fast - slow)) < 1e-5


@pytest.mark.parametrize("backend", BACKENDS)
def test_disc_blur_zero_radius_is_identity(backend, rng):
    img = rng.random((12, 12, 3))
    out = ak.disc_blur(img, np.zeros((12, 12)), backend=backend)
    assert np.allclose(out, img, atol=1e-12)


def test_disc_blur_uniform_field_unchanged():
    img = np.full((16, 16, 3), 0.37)
    out = ak.disc_blur(img, np.full((16, 16), 4.0))
    assert np.allclose(out, 0.37, atol=1e-12)


def test_disc_blur_border_renormalized(rng):
    # near the border the disc is clipped; weights must renormalize so a
    # constant image stays constant even in the corners
    img = np.ones((9, 9, 1))
    out = ak.disc_blur(img, np.full((9, 9), 6.0))
    assert np.allclose(out, 1.0, atol=1e-12)


def test_disc_blur_preserves_mean_intensity_interior(rng):
    img = rng.random((40, 40, 1))
    out = ak.disc_blur(img, np.full((40, 40), 2.0))
    # away from borders the kernel is a true average: local means survive
    assert abs(out[10:30, 10:30].mean() - img[8:32, 8:32].mean()) < 0.02


def test_disc_blur_backends_agree(rng):
    if not ak.HAVE_NUMBA:
        pytest.skip("numba unavailable")
    img = rng.random((33, 29, 3))
    radius = rng.uniform(0.0, 6.0, size=(33, 29))
    a = ak.disc_blur(img, radius, backend="numpy")
    b = ak.disc_blur(img, radius, backend="numba")
    assert np.allclose(a, b, atol=1e-12)


def test_disc_blur_validates_inputs(rng):
    with pytest.raises(ConfigError):
        ak.disc_blur(rng.random((8, 8, 3)), np.zeros((4, 4)))
    with pytest.raises(ConfigError):
        ak.disc_blur(rng.random((8, 8, 3)), np.full((8, 8), -1.0))


# ---------------------------------------------------------------------------
# full render

def test_bokeh_closed_aperture_returns_byte_identical_copy(rng):
    img = rng.random((20, 20, 3))
    disp = rng.random((20, 20))
    out, radius = ak.bokeh_render(img, disp, alpha=0.0, focus_u=10.0, focus_v=10.0)
    assert np.array_equal(out, img)
    assert out is not img  # a copy, not the same buffer
    assert radius.max() == 0.0


def test_bokeh_blurs_off_focus_plane_only(rng):
    img = rng.random((30, 30, 3))
    disp = np.zeros((30, 30))
    disp[:, 15:] = 0.8  # right half on a different plane
    out, radius = ak.bokeh_render(img, disp, alpha=40.0, focus_u=5.0, focus_v=15.0)
    assert np.allclose(radius[:, :15], 0.0)
    assert radius[:, 15:].max() > 0.0
    # far from the plane boundary the focused half is untouched
    assert np.allclose(out[:, :6], img[:, :6], atol=1e-12)
    assert not np.allclose(out[:, 20:], img[:, 20:])


def test_bokeh_wider_aperture_blurs_more(rng):
    img = rng.random((24, 24, 3))
    disp = np.zeros((24, 24))
    disp[:12] = 1.0
    focus = dict(focus_u=12.0, focus_v=18.0)
    sharp, _ = ak.bokeh_render(img, disp, alpha=10.0, **focus)
    soft, _ = ak.bokeh_render(img, disp, alpha=80.0, **focus)
    # variance within the blurred half keeps dropping as alpha grows
    assert soft[:10].var() < sharp[:10].var() < img[:10].var()
