import math

import numpy as np
import pytest

from aquaghost import optics
from aquaghost.errors import UnknownPreset


def quantum_source(**kw):
    defaults = dict(kind="quantum", photon_pair_rate=1e6, detector_efficiency=0.5)
    defaults.update(kw)
    return optics.SourceModel(**defaults)


def classical_source(**kw):
    defaults = dict(kind="classical", photon_pair_rate=1e6, detector_efficiency=0.5)
    defaults.update(kw)
    return optics.SourceModel(**defaults)


class TestTransmittance:
    def test_zero_attenuation(self):
        ch = optics.WaterChannel(0.0, 5.0, 0.0)
        assert optics.transmittance(ch) == 1.0

    def test_analytic(self):
        ch = optics.WaterChannel(0.1, 1.0, 0.0)
        assert optics.transmittance(ch) == pytest.approx(math.exp(-0.1), rel=1e-12)

    def test_deep_value(self):
        ch = optics.WaterChannel(0.35, 2.0, 0.0)
        assert optics.transmittance(ch) == pytest.approx(0.4965853037914095, rel=1e-9)

    def test_composition(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            c1, c2 = rng.uniform(0, 3, 2)
            z = rng.uniform(0, 3)
            both = optics.transmittance(optics.WaterChannel(c1 + c2, z, 0.0))
            split = (optics.transmittance(optics.WaterChannel(c1, z, 0.0))
                     * optics.transmittance(optics.WaterChannel(c2, z, 0.0)))
            assert both == pytest.approx(split, rel=1e-12)

    def test_monotone(self):
        t = [optics.transmittance(optics.WaterChannel(c, 1.0, 0.0)) for c in (0.1, 0.2, 0.5)]
        assert t[0] > t[1] > t[2]


class TestEffectiveBackground:
    def test_reference_resolution(self):
        ch = optics.WaterChannel(0.1, 1.0, 5000.0, stray_scaling_exponent=2.0)
        got = optics.effective_background(ch, classical_source(), 80)
        assert got == 5000.0

    def test_quantum_classical_ratio(self):
        ch = optics.WaterChannel(0.1, 1.0, 5000.0)
        q = optics.effective_background(ch, quantum_source(), 120)
        c = optics.effective_background(ch, classical_source(), 120)
        assert q / c == pytest.approx(0.02, rel=1e-12)

    def test_r180_linear_scaling(self):
        ch = optics.WaterChannel(0.1, 1.0, 5000.0, stray_scaling_exponent=1.0)
        got = optics.effective_background(ch, classical_source(), 180)
        assert got == pytest.approx(5000.0 * 2.25, rel=1e-12)

    def test_nondecreasing_in_resolution(self):
        ch = optics.WaterChannel(0.1, 1.0, 5000.0, stray_scaling_exponent=0.7)
        vals = [optics.effective_background(ch, classical_source(), r) for r in (40, 80, 160)]
        assert vals[0] <= vals[1] <= vals[2]

    def test_quantum_never_exceeds_classical(self):
        ch = optics.WaterChannel(0.2, 1.5, 3000.0)
        for r in (40, 80, 180):
            assert (optics.effective_background(ch, quantum_source(), r)
                    <= optics.effective_background(ch, classical_source(), r))


class TestPresets:
    def test_shallow(self):
        ch = optics.preset("shallow")
        assert optics.transmittance(ch) == pytest.approx(0.9277434863285529, rel=1e-12)
        assert ch.background_rate == 8000.0

    def test_deep(self):
        ch = optics.preset("deep")
        assert optics.transmittance(ch) == pytest.approx(0.9048374180359595, rel=1e-12)
        assert ch.background_rate == 1500.0

    def test_unknown(self):
        with pytest.raises(UnknownPreset):
            optics.preset("abyss")


class TestValidation:
    def test_classical_gate_fixed(self):
        with pytest.raises(ValueError):
            classical_source(gating_suppression=0.5)

    def test_quantum_needs_suppression(self):
        with pytest.raises(ValueError):
            quantum_source(gating_suppression=1.0)

    def test_default_gating(self):
        assert quantum_source().gating_suppression == 0.02
        assert classical_source().gating_suppression == 1.0

    def test_negative_attenuation(self):
        with pytest.raises(ValueError):
            optics.WaterChannel(-0.1, 1.0, 0.0)
