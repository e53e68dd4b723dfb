"""Water-channel and light-source models.

The channel does two things to the measurement: Beer-Lambert attenuation of
the signal arm (a single lumped absorption+scattering coefficient) and an
additive uncorrelated background of stray coincidences.  The quantum and the
classical source share the identical forward model; the only difference is
the coincidence gate, which rejects most of the uncorrelated background for
the entangled source (gating_suppression) and none of it for classical light.
"""

import math
from dataclasses import dataclass

from .errors import UnknownPreset

REFERENCE_RESOLUTION = 80


@dataclass(frozen=True)
class WaterChannel:
    attenuation_coeff: float      # 1/m, lumped absorption + scattering loss
    path_length: float            # m
    background_rate: float        # stray coincidences/s at R = 80
    stray_scaling_exponent: float = 1.0
    preset_name: str = "custom"

    def __post_init__(self):
        if self.attenuation_coeff < 0 or self.path_length < 0:
            raise ValueError("attenuation and path length must be >= 0")
        if self.background_rate < 0 or self.stray_scaling_exponent < 0:
            raise ValueError("background rate and stray exponent must be >= 0")


@dataclass(frozen=True)
class SourceModel:
    kind: str                        # "quantum" or "classical"
    photon_pair_rate: float          # pairs/s
    detector_efficiency: float       # per arm, in (0, 1]
    coincidence_window: float = 1e-9  # s (metadata; background folded into rate)
    gating_suppression: float = None  # background fraction surviving the gate

    def __post_init__(self):
        if self.kind not in ("quantum", "classical"):
            raise ValueError(f"unknown source kind {self.kind!r}")
        if self.gating_suppression is None:
            object.__setattr__(
                self, "gating_suppression", 0.02 if self.kind == "quantum" else 1.0)
        if self.photon_pair_rate <= 0 or self.coincidence_window <= 0:
            raise ValueError("rates and window must be > 0")
        if not 0 < self.detector_efficiency <= 1:
            raise ValueError("detector efficiency must be in (0, 1]")
        if not 0 <= self.gating_suppression <= 1:
            raise ValueError("gating suppression must be in [0, 1]")
        if self.kind == "classical" and self.gating_suppression != 1.0:
            raise ValueError("classical light has no coincidence gate: suppression = 1")
        if self.kind == "quantum" and self.gating_suppression >= 1.0:
            raise ValueError("quantum gating must suppress background (< 1)")


def transmittance(channel):
    """Beer-Lambert signal-arm transmittance exp(-c * z), in (0, 1]."""
    return math.exp(-channel.attenuation_coeff * channel.path_length)


def effective_background(channel, source, resolution):
    """Post-gate stray coincidence rate (counts/s) at the given grid resolution.

    Finer binning admits more stray photons per logical pixel budget; that is
    modeled as (R/80)^e growth with configurable exponent e.
    """
    if resolution < 1:
        raise ValueError("resolution must be >= 1")
    scale = (resolution / REFERENCE_RESOLUTION) ** channel.stray_scaling_exponent
    return source.gating_suppression * channel.background_rate * scale


_PRESETS = {
    # short path, turbid, bright ambient
    "shallow": dict(attenuation_coeff=0.15, path_length=0.5,
                    background_rate=8000.0, stray_scaling_exponent=1.0),
    # long path, clear, dim ambient
    "deep": dict(attenuation_coeff=0.05, path_length=2.0,
                 background_rate=1500.0, stray_scaling_exponent=1.0),
}


def preset(name):
    """Repo-default water channels for 'shallow' and 'deep' tank fills."""
    try:
        params = _PRESETS[name]
    except KeyError:
        raise UnknownPreset(f"unknown water preset {name!r}; "
                            f"expected one of {sorted(_PRESETS)}")
    return WaterChannel(preset_name=name, **params)
