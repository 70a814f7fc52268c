"""Rayleigh-faded SINR, SINR-driven modulation choice and per-resource rates."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .config import ChannelParams


@dataclass(frozen=True)
class McsScheme:
    name: str
    constellation_size: int
    min_sinr_db: float


def mcs_table(thresholds_db: Sequence[float] = ChannelParams.mcs_thresholds_db) -> tuple[McsScheme, ...]:
    q, q16, q64, q256 = thresholds_db
    if not (q < q16 < q64 < q256):
        raise ValueError("MCS thresholds must be strictly increasing")
    return (
        McsScheme("BPSK", 2, -math.inf),
        McsScheme("QPSK", 4, q),
        McsScheme("QAM16", 16, q16),
        McsScheme("QAM64", 64, q64),
        McsScheme("QAM256", 256, q256),
    )


MCS_TABLE = mcs_table()


def db_to_linear(db: float) -> float:
    return 10.0 ** (db / 10.0)


def sample_fading(mean_sinr_db: float, rng: np.random.Generator, size=None):
    """Instantaneous SINR under Rayleigh fading.

    Rayleigh amplitude means exponentially distributed power, so the
    result is the linear mean SINR times a unit-mean exponential variate.
    """
    return db_to_linear(mean_sinr_db) * rng.standard_exponential(size)


def select_mcs(sinr: float, table: Sequence[McsScheme] = MCS_TABLE) -> McsScheme:
    """Highest-order scheme whose threshold does not exceed ``sinr`` (linear)."""
    db = 10.0 * math.log10(sinr) if sinr > 0 else -math.inf
    chosen = table[0]
    for scheme in table[1:]:
        if scheme.min_sinr_db <= db:
            chosen = scheme
    return chosen


def ber(scheme: McsScheme, sinr: float, override: dict[str, float] | None = None) -> float:
    """Uncoded bit error rate; exponential approximations for BPSK and M-QAM."""
    if override and scheme.name in override:
        return float(override[scheme.name])
    if scheme.constellation_size == 2:
        value = 0.5 * math.exp(-sinr)
    else:
        value = 0.2 * math.exp(-1.5 * sinr / (scheme.constellation_size - 1))
    return min(max(value, 0.0), 0.5)


def resource_rate(bw: float, sinr: float, ber_value: float) -> float:
    return bw * math.log2(1.0 + sinr) * (1.0 - ber_value)


def link_rate(rates: Sequence[float]) -> float:
    return float(sum(rates))


def adaptive_rate(bw: float, sinr: float, table: Sequence[McsScheme] = MCS_TABLE,
                  override: dict[str, float] | None = None) -> float:
    """Resource rate with BER taken from the scheme selected at ``sinr``."""
    return resource_rate(bw, sinr, ber(select_mcs(sinr, table), sinr, override))


def rate_array(bw: float, sinr: np.ndarray, params: ChannelParams | None = None) -> np.ndarray:
    """Vectorised ``adaptive_rate`` over an array of linear SINRs."""
    params = params or ChannelParams()
    table = mcs_table(params.mcs_thresholds_db)
    sinr = np.asarray(sinr, dtype=float)
    with np.errstate(divide="ignore"):
        db = 10.0 * np.log10(sinr)
    thresholds = np.array([s.min_sinr_db for s in table[1:]])
    idx = np.searchsorted(thresholds, db, side="right")
    order = np.array([s.constellation_size for s in table], dtype=float)[idx]
    b = np.where(order == 2, 0.5 * np.exp(-sinr), 0.2 * np.exp(-1.5 * sinr / (order - 1)))
    if params.ber_override:
        for k, scheme in enumerate(table):
            if scheme.name in params.ber_override:
                b = np.where(idx == k, params.ber_override[scheme.name], b)
    b = np.clip(b, 0.0, 0.5)
    return bw * np.log2(1.0 + sinr) * (1.0 - b)
