import math

import pytest

from levicool.constants import C, EPS0, HBAR
from levicool.optics import Beam, focus, focus_from_waist


def test_waist_and_focus():
    b = Beam(1064e-9, 0.07, 0.9)
    f = focus(b)
    assert b.waist == pytest.approx(1064e-9 / (math.pi * 0.9))
    assert f.w0 == b.waist
    assert f.y0 == pytest.approx(math.pi * f.w0 ** 2 / 1064e-9)
    assert f.k0 == pytest.approx(2 * math.pi / 1064e-9)
    # peak intensity of a Gaussian focus: 2P / (pi w0^2)
    assert f.intensity == pytest.approx(2 * 0.07 / (math.pi * f.w0 ** 2), rel=1e-12)
    assert f.field_amplitude ** 2 * C * EPS0 / 2 == pytest.approx(f.intensity, rel=1e-12)
    photon = 2 * math.pi * HBAR * C / 1064e-9
    assert f.photon_flux * photon == pytest.approx(f.intensity, rel=1e-12)


@pytest.mark.parametrize("na", [0.0, -0.1, 1.01])
def test_beam_rejects_bad_na(na):
    with pytest.raises(ValueError):
        Beam(1064e-9, 0.07, na)


def test_beam_rejects_bad_power_and_wavelength():
    with pytest.raises(ValueError):
        Beam(1064e-9, -1, 0.5)
    with pytest.raises(ValueError):
        Beam(0, 1, 0.5)


def test_focus_from_waist_allows_tight_waist():
    # effective NA above one is allowed when the waist is given directly
    f = focus_from_waist(1064e-9, 0.07, 200e-9)
    assert f.w0 == 200e-9
    assert f.intensity > 0


def test_intensity_linear_in_power():
    a = focus(Beam(1064e-9, 0.04, 0.9))
    b = focus(Beam(1064e-9, 0.08, 0.9))
    assert b.intensity / a.intensity == pytest.approx(2.0)
