import math

import numpy as np
import pytest

from fewatom.trap import (TrapConfig, depth_from_cos, depth_minimum,
                          effective_volume, pair_rate_gradient_scaling,
                          photons_to_stop, saturation_parameter, trap_depth)


def test_saturation_parameter_default():
    s = saturation_parameter(TrapConfig())
    assert s == pytest.approx(0.8320291606410586, rel=1e-12)


def test_saturation_parameter_scaling():
    base = TrapConfig()
    s0 = saturation_parameter(base)
    # linear in intensity
    assert saturation_parameter(TrapConfig(intensity=840.0)) == pytest.approx(2 * s0)
    # on resonance the Lorentzian factor drops out
    res = TrapConfig(detuning=0.0, intensity=11.0)
    assert saturation_parameter(res) == pytest.approx(1.0, rel=1e-12)
    # explicit i_sat override
    assert saturation_parameter(base, i_sat=22.0) == pytest.approx(s0 / 2.0)


def test_effective_volume():
    v = effective_volume(10e-6)
    assert v == pytest.approx(1.9687012432153028e-15, rel=1e-12)
    assert v == pytest.approx((math.pi / 2.0) ** 1.5 * 1e-15, rel=1e-14)
    assert effective_volume(20e-6) == pytest.approx(8.0 * v, rel=1e-12)
    with pytest.raises(ValueError):
        effective_volume(0.0)


def test_depth_minimum_default():
    # force-model estimate at the default operating point
    d = depth_minimum(TrapConfig())
    assert d == pytest.approx(0.14492300282222922, rel=1e-12)


def test_depth_minimum_override():
    assert depth_minimum(TrapConfig(depth_min=0.045)) == 0.045


def test_depth_reference_point():
    # kappa_geom was calibrated so the reference point gives 0.15 K
    cfg = TrapConfig(intensity=420.0 * 0.87 / saturation_parameter(TrapConfig()))
    assert saturation_parameter(cfg) == pytest.approx(0.87, rel=1e-12)
    assert depth_minimum(cfg) == pytest.approx(0.15, rel=1e-3)


def test_trap_depth_anisotropy():
    cfg = TrapConfig(depth_anisotropy=4.0)
    d_min = trap_depth(cfg, math.pi / 2.0)
    d_max = trap_depth(cfg, 0.0)
    assert d_min == pytest.approx(depth_minimum(cfg), rel=1e-12)
    assert d_max / d_min == pytest.approx(4.0, rel=1e-12)
    # symmetric under theta -> pi - theta
    th = np.linspace(0.0, math.pi / 2.0, 7)
    np.testing.assert_allclose(trap_depth(cfg, th), trap_depth(cfg, math.pi - th),
                               rtol=1e-12)
    np.testing.assert_allclose(depth_from_cos(cfg, np.cos(th)), trap_depth(cfg, th),
                               rtol=1e-12)


def test_photons_to_stop():
    n = photons_to_stop(0.1)
    assert n == pytest.approx(1004.18683298019, rel=1e-10)
    # sqrt(E) scaling of the stopping requirement
    assert photons_to_stop(0.4) == pytest.approx(2.0 * n, rel=1e-12)
    with pytest.raises(ValueError):
        photons_to_stop(-0.1)


def test_pair_rate_gradient_scaling():
    # density ~ B'^{3/2} per atom, so the pair rate goes as the cube
    assert pair_rate_gradient_scaling(8.0, 3.75) == pytest.approx(
        (3.75 / 8.0) ** 3, rel=1e-14)
    assert pair_rate_gradient_scaling(3.75, 8.0) == pytest.approx(
        9.709037037037037, rel=1e-10)
    with pytest.raises(ValueError):
        pair_rate_gradient_scaling(0.0, 1.0)


def test_trap_config_validation():
    with pytest.raises(ValueError):
        TrapConfig(intensity=-1.0)
    with pytest.raises(ValueError):
        TrapConfig(r0=1e-7)
    with pytest.raises(ValueError):
        TrapConfig(depth_anisotropy=0.5)
    with pytest.raises(ValueError):
        TrapConfig(bg_lifetime=0.0)
