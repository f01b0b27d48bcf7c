"""Radio constants, unit conversion, path loss and inhibition geometry.

All power arithmetic is done in linear milliwatts; dBm only appears on the
configuration boundary.  Distances are in meters.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

THERMAL_NOISE_DBM_PER_HZ = -174.0


def dbm_to_mw(dbm):
    return 10.0 ** (dbm / 10.0)


def mw_to_dbm(mw):
    return 10.0 * math.log10(mw)


def db_to_linear(db):
    return 10.0 ** (db / 10.0)


def linear_to_db(x):
    return 10.0 * math.log10(x)


@dataclass(frozen=True)
class RadioConfig:
    """Transmitter / sensing parameters of every access point.

    ``noise_power_dbm`` is derived: thermal noise over ``bandwidth_hz`` plus
    ``noise_figure_db``.  Setting ``noiseless=True`` turns the receiver into
    a pure SIR receiver (noise power of zero milliwatts).
    """

    tx_power_dbm: float = 20.0
    sense_threshold_dbm: float = -65.0
    path_loss_exponent: float = 4.0
    bandwidth_hz: float = 10e6
    noise_figure_db: float = 0.0
    noiseless: bool = False

    def __post_init__(self):
        if not self.path_loss_exponent > 2.0:
            raise ValueError(
                f"path_loss_exponent must exceed 2, got {self.path_loss_exponent}"
            )
        if not self.tx_power_dbm > self.sense_threshold_dbm:
            raise ValueError(
                "tx_power_dbm must exceed sense_threshold_dbm "
                f"({self.tx_power_dbm} <= {self.sense_threshold_dbm})"
            )
        if not self.bandwidth_hz > 0:
            raise ValueError(f"bandwidth_hz must be positive, got {self.bandwidth_hz}")

    @property
    def noise_power_dbm(self) -> float:
        return (
            THERMAL_NOISE_DBM_PER_HZ
            + 10.0 * math.log10(self.bandwidth_hz)
            + self.noise_figure_db
        )

    @property
    def tx_power_mw(self) -> float:
        return dbm_to_mw(self.tx_power_dbm)

    @property
    def noise_power_mw(self) -> float:
        if self.noiseless:
            return 0.0
        return dbm_to_mw(self.noise_power_dbm)


@dataclass(frozen=True)
class InhibitionGeometry:
    """Contention radius ``d_inh``, service radius ``r_inh`` and the area
    ``kappa`` each retained AP claims exclusively."""

    d_inh: float
    r_inh: float = field(init=False)
    kappa: float = field(init=False)

    def __post_init__(self):
        if not self.d_inh > 0:
            raise ValueError(f"d_inh must be positive, got {self.d_inh}")
        object.__setattr__(self, "r_inh", self.d_inh / 2.0)
        object.__setattr__(self, "kappa", math.pi * self.r_inh**2)


def derive_inhibition(radio: RadioConfig) -> InhibitionGeometry:
    """Distance at which the received power drops to the sensing threshold."""
    ratio = dbm_to_mw(radio.tx_power_dbm) / dbm_to_mw(radio.sense_threshold_dbm)
    if ratio <= 1.0:
        raise ValueError("transmit power must exceed the sensing threshold")
    return InhibitionGeometry(ratio ** (1.0 / radio.path_loss_exponent))


def path_loss(r, alpha):
    """Unbounded power-law path loss ``r**-alpha``.

    Raises for non-positive distances: the model is singular there and the
    caller is expected to keep transmitters apart.
    """
    if r <= 0:
        raise ValueError(f"path loss undefined at non-positive distance {r}")
    return r ** (-alpha)


@dataclass(frozen=True)
class Torus:
    """Square window of side ``side`` with periodic boundaries."""

    side: float

    @property
    def area(self) -> float:
        return self.side * self.side

    @property
    def extent(self) -> float:
        return self.side


@dataclass(frozen=True)
class Disk:
    """Disk of radius ``radius`` centered at the origin (no wraparound)."""

    radius: float

    @property
    def area(self) -> float:
        return math.pi * self.radius**2

    @property
    def extent(self) -> float:
        return 2.0 * self.radius


@dataclass(frozen=True)
class DeploymentConfig:
    ap_density: float
    window: Torus | Disk
    master_seed: int = 0

    def __post_init__(self):
        if not self.ap_density > 0:
            raise ValueError(f"ap_density must be positive, got {self.ap_density}")
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")

    def check_window(self, d_inh: float) -> bool:
        """Warn when the window is too small for boundary effects to be ignored."""
        ok = self.window.extent >= 10.0 * d_inh
        if not ok:
            warnings.warn(
                f"window extent {self.window.extent:.1f} m is below 10*d_inh "
                f"({10 * d_inh:.1f} m); boundary effects will dominate",
                stacklevel=2,
            )
        return ok
