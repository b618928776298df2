# cbrlab/physics/phys_units.py
"""Physical constants and unit systems.

Closed-form calculators work directly in CGS. The time-stepping engines
work in a dimensionless system where hbar = m = omega = 1 (and k_B = 1);
`natural_units` builds that system for a given parameter set and
`to_engine_units` / `from_engine_units` move parameters across.
"""
import logging
import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import TYPE_CHECKING, Dict

from cbrlab.errors import ValidationError

if TYPE_CHECKING:
    from cbrlab.physics.fock_algebra import ModelParams

# Configure logging
logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PhysicalConstants:
    """hbar [erg s] and k_B [erg/K] expressed in some unit system."""
    hbar: float
    k_B: float

    def __post_init__(self):
        for name in ("hbar", "k_B"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(name, f"must be finite and positive, got {value!r}")


# Standard reference values
CGS = PhysicalConstants(hbar=1.0546e-27, k_B=1.3807e-16)
ENGINE = PhysicalConstants(hbar=1.0, k_B=1.0)


class UnitKind(str, Enum):
    CGS = "cgs"
    ENGINE = "engine"


@dataclass(frozen=True)
class UnitSystem:
    """Scales of one engine unit expressed in CGS.

    scale_time is seconds per engine time unit, scale_length centimetres
    per engine length unit, scale_mass grams per engine mass unit and
    scale_temperature kelvin per engine temperature unit.
    """
    kind: UnitKind = UnitKind.CGS
    scale_time: float = 1.0
    scale_length: float = 1.0
    scale_mass: float = 1.0
    scale_temperature: float = 1.0

    def __post_init__(self):
        for name in ("scale_time", "scale_length", "scale_mass", "scale_temperature"):
            value = getattr(self, name)
            if not math.isfinite(value) or value <= 0:
                raise ValidationError(name, f"must be finite and positive, got {value!r}")

    @classmethod
    def identity(cls) -> "UnitSystem":
        return cls(kind=UnitKind.CGS)

    def constants(self, reference: PhysicalConstants = CGS) -> PhysicalConstants:
        """hbar and k_B measured in this system's units."""
        energy = self.scale_mass * self.scale_length ** 2 / self.scale_time ** 2
        return PhysicalConstants(
            hbar=reference.hbar / (energy * self.scale_time),
            k_B=reference.k_B * self.scale_temperature / energy,
        )


def natural_units(params: "ModelParams") -> UnitSystem:
    """Unit system in which hbar = m = omega = k_B = 1 for these parameters."""
    hbar, k_B = params.constants.hbar, params.constants.k_B
    t_u = 1.0 / params.omega
    return UnitSystem(
        kind=UnitKind.ENGINE,
        scale_time=t_u,
        scale_length=math.sqrt(hbar / (params.m * params.omega)),
        scale_mass=params.m,
        scale_temperature=hbar / (k_B * t_u),
    )


def to_engine_units(params: "ModelParams", unit: UnitSystem) -> "ModelParams":
    """Express params (given in CGS) in the units of ``unit``.

    Raises:
        ValidationError: a field is non-finite or out of range
    """
    converted = replace(
        params,
        m=params.m / unit.scale_mass,
        M=params.M / unit.scale_mass,
        omega=params.omega * unit.scale_time,
        Lambda=params.Lambda * unit.scale_time,
        tau_c=params.tau_c / unit.scale_time,
        T=params.T / unit.scale_temperature,
        constants=unit.constants(params.constants),
    )
    logger.debug(f"Converted params to {unit.kind.value} units: {converted}")
    return converted


def from_engine_units(params: "ModelParams", unit: UnitSystem,
                      reference: PhysicalConstants = CGS) -> "ModelParams":
    """Inverse of `to_engine_units`."""
    return replace(
        params,
        m=params.m * unit.scale_mass,
        M=params.M * unit.scale_mass,
        omega=params.omega / unit.scale_time,
        Lambda=params.Lambda / unit.scale_time,
        tau_c=params.tau_c * unit.scale_time,
        T=params.T * unit.scale_temperature,
        constants=reference,
    )


def dimensionless_groups(params: "ModelParams") -> Dict[str, float]:
    """The combinations that fully determine the engine dynamics."""
    hbar, k_B = params.constants.hbar, params.constants.k_B
    p = math.inf if params.T == 0 else hbar * params.omega / (k_B * params.T)
    return {
        "N": params.N,
        "nbar": params.nbar,
        "Lambda_over_omega": params.Lambda / params.omega,
        "omega_tau_c": params.omega * params.tau_c,
        "hbar_omega_over_kT": p,
    }
