"""Single-path, LOS-Rician and NLOS multipath channel generation.

All generators are normalized to unit average total path power, so the
pre-beamforming SNR is fixed entirely by the transmit power (noise power is
pinned to 1).  Angles of arrival drawn on the full circle are folded to the
front half-plane along equal-sine lines, matching ULA front/back ambiguity.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .arrays import UniformLinearArray, steering_vector

__all__ = [
    "PropagationPath",
    "ChannelRealization",
    "SnrSpec",
    "fold_to_front",
    "single_path",
    "los_rician",
    "nlos_multipath",
    "calibrate_snr",
    "SinglePathModel",
    "LosRicianModel",
    "NlosMultipathModel",
    "channel_model_from_config",
]

_TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class PropagationPath:
    complex_gain: complex
    aod_deg: float
    aoa_deg: float

    def __post_init__(self):
        if not (math.isfinite(self.complex_gain.real) and math.isfinite(self.complex_gain.imag)):
            raise ValueError(f"path gain must be finite, got {self.complex_gain}")


@dataclass
class ChannelRealization:
    matrix: np.ndarray                  # N_R x N_T
    paths: list[PropagationPath]
    model_tag: str                      # single_path | los_rician | nlos_multipath


@dataclass(frozen=True)
class SnrSpec:
    snr_db: float
    transmit_power: float
    noise_power: float


def fold_to_front(angle_deg: float) -> float:
    """Map an angle to the front half-plane [-90, 90] with identical sine."""
    return math.degrees(math.asin(math.sin(math.radians(angle_deg))))


def single_path(aod_deg: float, aoa_deg: float, gain: complex,
                tx_array: UniformLinearArray,
                rx_array: UniformLinearArray) -> ChannelRealization:
    """Rank-one channel gain * u^H(aoa) v(aod)."""
    v = steering_vector(tx_array, aod_deg)
    u = steering_vector(rx_array, aoa_deg)
    matrix = gain * np.outer(u.conj(), v)
    return ChannelRealization(matrix, [PropagationPath(gain, aod_deg, aoa_deg)],
                              "single_path")


def _scatter_matrix(rx_array, tx_array, rng) -> np.ndarray:
    """I.i.d. CN(0, 1) matrix; E||.||_F^2 = N_R * N_T."""
    shape = (rx_array.num_elements, tx_array.num_elements)
    z = rng.standard_normal((2,) + shape)
    return (z[0] + 1j * z[1]) / math.sqrt(2.0)


def los_rician(aod_deg: float, aoa_deg: float,
               tx_array: UniformLinearArray, rx_array: UniformLinearArray,
               rng: np.random.Generator, k_factor_db: float = 13.2,
               gain: complex | None = None, model_tag: str = "los_rician") -> ChannelRealization:
    """Rician channel: dominant rank-one part plus an i.i.d. diffuse part.

    The dominant component carries fraction K/(K+1) of the average Frobenius
    power and the scatter matrix the remaining 1/(K+1); with the default
    unit-modulus ``gain`` (random phase) the total average power equals that
    of the bare rank-one channel.  Draw order: phase (when gain is None),
    then the scatter matrix.
    """
    if not math.isfinite(k_factor_db):
        raise ValueError(f"k_factor_db must be finite, got {k_factor_db}")
    if gain is None:
        gain = complex(np.exp(1j * rng.uniform(0.0, _TWO_PI)))
    k = 10.0 ** (k_factor_db / 10.0)
    dominant = single_path(aod_deg, aoa_deg, gain, tx_array, rx_array).matrix
    scatter = abs(gain) * _scatter_matrix(rx_array, tx_array, rng)
    matrix = math.sqrt(k / (k + 1.0)) * dominant + math.sqrt(1.0 / (k + 1.0)) * scatter
    return ChannelRealization(matrix, [PropagationPath(gain, aod_deg, aoa_deg)],
                              model_tag)


def nlos_multipath(tx_array: UniformLinearArray, rx_array: UniformLinearArray,
                   rng: np.random.Generator, k_factor_db: float = 6.0,
                   mean_paths: float = 1.8,
                   aod_deg_interval: tuple[float, float] = (-30.0, 30.0),
                   aoa_deg_interval: tuple[float, float] = (0.0, 360.0)) -> ChannelRealization:
    """Sum of max{1, Poisson(mean_paths)} Rician paths with unit total power.

    Per-path power fractions are sorted normalized unit-mean exponentials
    (heavy dominant path); each path is a Rician component scaled by the
    square root of its fraction.  AoAs are drawn on the given interval and
    folded to the front half-plane.  Draw order: path count, AoDs, AoAs,
    phases, fractions, then per-path scatter matrices.
    """
    num_paths = max(1, int(rng.poisson(mean_paths)))
    aods = rng.uniform(aod_deg_interval[0], aod_deg_interval[1], num_paths)
    aoas = rng.uniform(aoa_deg_interval[0], aoa_deg_interval[1], num_paths)
    phases = rng.uniform(0.0, _TWO_PI, num_paths)
    fracs = rng.exponential(1.0, num_paths)
    fracs = np.sort(fracs / fracs.sum())[::-1]

    matrix = np.zeros((rx_array.num_elements, tx_array.num_elements), dtype=complex)
    paths = []
    for m in range(num_paths):
        amp = math.sqrt(fracs[m])
        gain = amp * complex(np.exp(1j * phases[m]))
        aoa = fold_to_front(aoas[m])
        part = los_rician(aods[m], aoa, tx_array, rx_array, rng,
                          k_factor_db=k_factor_db, gain=np.exp(1j * phases[m]))
        matrix += amp * part.matrix
        paths.append(PropagationPath(gain, float(aods[m]), aoa))
    return ChannelRealization(matrix, paths, "nlos_multipath")


def calibrate_snr(snr_db: float) -> SnrSpec:
    """Pin noise power to 1 and absorb the SNR into the transmit power."""
    return SnrSpec(snr_db=snr_db, transmit_power=10.0 ** (snr_db / 10.0),
                   noise_power=1.0)


@dataclass(frozen=True)
class SinglePathModel:
    """Rank-one channel with uniform AoD/AoA and unit-modulus random-phase gain."""

    aod_deg_interval: tuple[float, float] = (-30.0, 30.0)
    aoa_deg_interval: tuple[float, float] = (0.0, 360.0)

    tag = "single_path"

    def sample(self, tx_array, rx_array, rng) -> ChannelRealization:
        aod = rng.uniform(*self.aod_deg_interval)
        aoa = fold_to_front(rng.uniform(*self.aoa_deg_interval))
        gain = complex(np.exp(1j * rng.uniform(0.0, _TWO_PI)))
        return single_path(aod, aoa, gain, tx_array, rx_array)

    def to_config(self) -> dict:
        return {"model": self.tag,
                "aod_deg": list(self.aod_deg_interval),
                "aoa_deg": list(self.aoa_deg_interval)}


@dataclass(frozen=True)
class LosRicianModel:
    k_factor_db: float = 13.2
    aod_deg_interval: tuple[float, float] = (-30.0, 30.0)
    aoa_deg_interval: tuple[float, float] = (0.0, 360.0)

    tag = "los_rician"

    def sample(self, tx_array, rx_array, rng) -> ChannelRealization:
        aod = rng.uniform(*self.aod_deg_interval)
        aoa = fold_to_front(rng.uniform(*self.aoa_deg_interval))
        return los_rician(aod, aoa, tx_array, rx_array, rng,
                          k_factor_db=self.k_factor_db)

    def to_config(self) -> dict:
        return {"model": self.tag, "k_factor_db": self.k_factor_db,
                "aod_deg": list(self.aod_deg_interval),
                "aoa_deg": list(self.aoa_deg_interval)}


@dataclass(frozen=True)
class NlosMultipathModel:
    k_factor_db: float = 6.0
    mean_paths: float = 1.8
    aod_deg_interval: tuple[float, float] = (-30.0, 30.0)
    aoa_deg_interval: tuple[float, float] = (0.0, 360.0)

    tag = "nlos_multipath"

    def sample(self, tx_array, rx_array, rng) -> ChannelRealization:
        return nlos_multipath(tx_array, rx_array, rng,
                              k_factor_db=self.k_factor_db,
                              mean_paths=self.mean_paths,
                              aod_deg_interval=self.aod_deg_interval,
                              aoa_deg_interval=self.aoa_deg_interval)

    def to_config(self) -> dict:
        return {"model": self.tag, "k_factor_db": self.k_factor_db,
                "mean_paths": self.mean_paths,
                "aod_deg": list(self.aod_deg_interval),
                "aoa_deg": list(self.aoa_deg_interval)}


def channel_model_from_config(cfg: dict):
    """Build a channel model from its manifest/config dict."""
    cfg = dict(cfg)
    tag = cfg.pop("model")
    kwargs = {}
    if "aod_deg" in cfg:
        kwargs["aod_deg_interval"] = tuple(cfg.pop("aod_deg"))
    if "aoa_deg" in cfg:
        kwargs["aoa_deg_interval"] = tuple(cfg.pop("aoa_deg"))
    if tag == "single_path":
        cls = SinglePathModel
    elif tag == "los_rician":
        cls = LosRicianModel
    elif tag == "nlos_multipath":
        cls = NlosMultipathModel
    else:
        raise ValueError(f"unknown channel model {tag!r}")
    kwargs.update(cfg)
    return cls(**kwargs)
