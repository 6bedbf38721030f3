import numpy as np
import pytest

from msunmix.bandsim import (
    MultispectralValue,
    SensitivityChannel,
    SensitivityModel,
    channel_reference_wavelengths,
    integrate_channel,
    resample_channel,
    simulate_cube,
    simulate_spectrum,
    trapezoid_weights,
)
from msunmix.core import (
    EndmemberSet,
    SpectralCube,
    Spectrum,
    WavelengthAxis,
    flatten,
    mix,
)
from util import box_channel, pan_camera, toy_camera, triangle_channel, uniform_axis


class TestResample:
    def test_identity_on_same_axis(self):
        axis = uniform_axis()
        ch = triangle_channel("t", axis, 700.0, 150.0)
        out = resample_channel(ch, axis)
        assert np.array_equal(out.response, ch.response)

    def test_midpoint_of_line(self):
        src = WavelengthAxis([400.0, 500.0])
        ch = SensitivityChannel("ramp", src, [0.0, 1.0])
        out = resample_channel(ch, WavelengthAxis([400.0, 450.0, 500.0]))
        assert out.response[1] == pytest.approx(0.5, abs=0)

    def test_outside_support_is_zero(self):
        src = WavelengthAxis([400.0, 2500.0])
        ch = SensitivityChannel("wide", src, [1.0, 1.0])
        out = resample_channel(ch, WavelengthAxis([2400.0, 2600.0, 2700.0]))
        assert out.response[1] == 0.0
        assert out.response[2] == 0.0

    def test_exact_on_piecewise_linear_input(self):
        # breakpoints of the triangle are source samples, so any refinement
        # reproduces the triangle exactly
        src = WavelengthAxis([400.0, 500.0, 600.0, 700.0])
        ch = SensitivityChannel("tri", src, [0.0, 1.0, 0.5, 0.0])
        target = WavelengthAxis(np.linspace(400.0, 700.0, 31))
        out = resample_channel(ch, target)
        expected = np.interp(target.samples, src.samples, ch.response)
        assert np.array_equal(out.response, expected)

    def test_empty_overlap_raises(self):
        src = WavelengthAxis([400.0, 500.0])
        ch = SensitivityChannel("t", src, [1.0, 1.0])
        with pytest.raises(ValueError, match="empty overlap"):
            resample_channel(ch, WavelengthAxis([600.0, 700.0]))

    def test_degenerate_source_axis_raises(self):
        ch = SensitivityChannel("one", WavelengthAxis([500.0]), [1.0])
        with pytest.raises(ValueError, match="degenerate source axis"):
            resample_channel(ch, uniform_axis())


class TestIntegrate:
    def test_unit_everything_gives_span(self):
        axis = uniform_axis(400.0, 1000.0, 61)
        ones = Spectrum(axis, np.ones(61))
        ch = SensitivityChannel("flat", axis, np.ones(61))
        y = integrate_channel(ones, ones, ch)
        assert y == pytest.approx(600.0, rel=1e-12)

    def test_zero_reflectance_gives_zero(self):
        axis = uniform_axis()
        zero = Spectrum(axis, np.zeros(61))
        ch = triangle_channel("t", axis, 700.0, 200.0)
        assert integrate_channel(zero, None, ch) == 0.0

    def test_riemann_sum_oracle(self):
        # piecewise-linear R, triangular S on a 5-point axis: the trapezoid
        # sum equals a fine-grid Riemann sum of the piecewise-linear product
        axis = WavelengthAxis([400.0, 480.0, 560.0, 640.0, 720.0])
        r = Spectrum(axis, [0.2, 0.9, 0.4, 0.7, 0.1])
        s = SensitivityChannel("tri", axis, [0.0, 0.5, 1.0, 0.5, 0.0])
        y = integrate_channel(r, None, s)

        product = r.values * s.response
        fine = np.linspace(400.0, 720.0, 2_000_001)
        interpolated = np.interp(fine, axis.samples, product)
        dx = fine[1] - fine[0]
        riemann = (interpolated[:-1] + interpolated[1:]).sum() * dx / 2.0
        assert y == pytest.approx(riemann, rel=1e-9)

    def test_axis_mismatch_raises(self):
        axis = uniform_axis()
        other = uniform_axis(410.0, 990.0, 30)
        r = Spectrum(axis, np.ones(61))
        ch = triangle_channel("t", other, 700.0, 200.0)
        with pytest.raises(ValueError, match="resample"):
            integrate_channel(r, None, ch)


class TestSimulate:
    def test_jasper_shaped_real_camera(self):
        from msunmix.fileio import load_bundled_camera

        axis = WavelengthAxis(np.linspace(400.0, 2500.0, 198))
        rng = np.random.default_rng(11)
        cube = SpectralCube(100, 100, axis, rng.random((100, 100, 198)))
        out = simulate_cube(cube, load_bundled_camera("real"))
        assert (out.width, out.height, out.band_count) == (100, 100, 9)
        assert out.pan_bands == (8,)

    def test_synthetic_camera_band_count(self):
        from msunmix.fileio import load_bundled_camera

        axis = WavelengthAxis(np.linspace(400.0, 2500.0, 198))
        rng = np.random.default_rng(12)
        cube = SpectralCube(4, 4, axis, rng.random((4, 4, 198)))
        out = simulate_cube(cube, load_bundled_camera("synthetic"))
        assert out.band_count == 14
        assert out.pan_bands == ()

    def test_single_pixel_reduces_to_integral(self):
        axis = uniform_axis()
        rng = np.random.default_rng(13)
        cube = SpectralCube(1, 1, axis, rng.random((1, 1, 61)))
        ch = box_channel("box", axis, 500.0, 800.0)
        camera = SensitivityModel((ch,))
        out = simulate_cube(cube, camera)
        expected = integrate_channel(cube.pixel_spectrum(0, 0), None, ch)
        assert out.data[0, 0, 0] == pytest.approx(expected, rel=1e-12)

    def test_spectrum_path_matches_cube_path(self):
        axis = uniform_axis()
        rng = np.random.default_rng(23)
        cube = SpectralCube(1, 1, axis, rng.random((1, 1, 61)))
        camera = pan_camera(axis)
        from_cube = simulate_cube(cube, camera).data[0, 0]
        value = simulate_spectrum(cube.pixel_spectrum(0, 0), camera)
        assert value.channel_names == camera.channel_names()
        assert np.allclose(value.values, from_cube, rtol=1e-12)

    def test_illumination_weighting(self):
        axis = uniform_axis()
        rng = np.random.default_rng(14)
        cube = SpectralCube(2, 2, axis, rng.random((2, 2, 61)))
        illum = Spectrum(axis, np.linspace(0.5, 2.0, 61))
        camera = toy_camera(axis)
        lit = SensitivityModel(camera.channels, illumination=illum)
        out = simulate_cube(cube, lit)
        expected = integrate_channel(
            cube.pixel_spectrum(1, 0), illum, resample_channel(camera.channels[0], axis)
        )
        assert out.data[1, 0, 0] == pytest.approx(expected, rel=1e-12)

    def test_normalize_flag(self):
        axis = uniform_axis()
        cube = SpectralCube(1, 1, axis, np.full((1, 1, 61), 0.5))
        camera = toy_camera(axis)
        out = simulate_cube(cube, camera, normalize=True)
        # flat reflectance 0.5 maps to 0.5 per channel once normalized
        assert np.allclose(out.data[0, 0], 0.5, rtol=1e-12)

    def test_linearity_and_mixing_commutation(self):
        axis = uniform_axis(400.0, 1000.0, 101)
        rng = np.random.default_rng(15)
        camera = pan_camera(axis)
        signatures = rng.random((3, 101)) + 0.05
        ems = EndmemberSet(axis, signatures)
        fractions = rng.dirichlet(np.ones(3))

        mixed = mix(ems, fractions)
        cube_of_mix = SpectralCube(1, 1, axis, mixed.values.reshape(1, 1, -1))
        sim_mix = simulate_cube(cube_of_mix, camera).data[0, 0]

        cube_of_ems = SpectralCube(3, 1, axis, signatures.reshape(1, 3, -1))
        sim_ems = flatten(simulate_cube(cube_of_ems, camera))  # (channels, 3)
        mix_sim = sim_ems @ fractions
        assert np.allclose(sim_mix, mix_sim, rtol=1e-12)

    def test_monotone_in_reflectance(self):
        axis = uniform_axis()
        rng = np.random.default_rng(16)
        lower = rng.random((2, 3, 61))
        upper = lower + rng.random((2, 3, 61))
        camera = pan_camera(axis)
        y1 = simulate_cube(SpectralCube(3, 2, axis, lower), camera).data
        y2 = simulate_cube(SpectralCube(3, 2, axis, upper), camera).data
        assert np.all(y2 - y1 >= -1e-12 * np.abs(y2).max())

    def test_empty_overlap_raises(self):
        axis = uniform_axis(400.0, 1000.0, 61)
        cube = SpectralCube(1, 1, axis, np.ones((1, 1, 61)))
        far = WavelengthAxis([1500.0, 1600.0])
        camera = SensitivityModel(
            (SensitivityChannel("far", far, [1.0, 1.0]),)
        )
        with pytest.raises(ValueError, match="empty overlap"):
            simulate_cube(cube, camera)


class TestReferenceWavelengths:
    def test_centroid_of_symmetric_triangle(self):
        axis = uniform_axis()
        ch = triangle_channel("t", axis, 700.0, 100.0)
        assert ch.centroid() == pytest.approx(700.0, abs=1e-9)

    def test_pan_channel_bumped_to_keep_axis_increasing(self):
        camera = pan_camera()
        refs = channel_reference_wavelengths(camera)
        assert np.all(np.diff(refs) > 0)
        # the panchromatic centroid sits mid-range, below the last selective
        assert camera.channels[-1].centroid() < refs[-2]

    def test_trapezoid_weights_sum_to_span(self):
        axis = WavelengthAxis([400.0, 430.0, 500.0, 650.0])
        assert trapezoid_weights(axis).sum() == pytest.approx(250.0, rel=1e-14)

    def test_multispectral_value_validation(self):
        with pytest.raises(ValueError, match="channels"):
            MultispectralValue(np.ones(3), ("a", "b"))
        with pytest.raises(ValueError, match="nonnegative"):
            MultispectralValue(np.array([1.0, -0.5]), ("a", "b"))
