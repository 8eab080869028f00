"""
Scaling fits, QCRB curves, the Wigner-Eckart element of the rank-2 tensor and the
conversion of a kappa precision into a bound on the C_0^(2) coefficient.
"""

# SPDX-License-Identifier: Apache-2.0

import logging
import math
from typing import List, Sequence, Tuple

import numpy as np
import pydantic
from scipy.stats import linregress

from lsv_metrology import FIT_MIN_POINTS
from lsv_metrology.errors import ClosedFormUndefinedError
from lsv_metrology.metrology import EstimationContext, Frame, hl_bound, qcrb, qfi_dicke_fast
from lsv_metrology.utils import SpinLike, even_grid, parallel_map, parse_spin

log = logging.getLogger(__name__)


class PowerLawFit(pydantic.BaseModel):
    """Least-squares fit y = prefactor * N^gamma in log-log space."""

    model_config = pydantic.ConfigDict(frozen=True)

    prefactor: float = pydantic.Field(gt=0)
    gamma: float
    r2: float = pydantic.Field(ge=0, le=1)
    n_range: Tuple[float, float]
    points: int


class SensitivityInput(pydantic.BaseModel):
    """kappa precision (Hz), transition energy ratio Delta E / (h C_0^(2)) (Hz) and Delta(j_z^2)."""

    model_config = pydantic.ConfigDict(frozen=True)

    delta_kappa_over_2pi: float = pydantic.Field(ge=0)
    energy_ratio: float = pydantic.Field(gt=0)
    jz2_fluct: float = pydantic.Field(1.0, gt=0)


class QcrbRow(pydantic.BaseModel):
    """One N of the QCRB curve, precisions in rad/s."""

    N: int
    dk_sql: float
    dk_hl: float
    dk_dicke: float
    improvement_db: float


class ImprovementRatios(pydantic.BaseModel):
    """Raw SQL and HL gain factors at N, and the same against a small uncorrelated baseline."""

    N: int
    baseline: int
    sql_factor: float
    hl_factor: float
    sql_vs_baseline: float
    hl_vs_baseline: float


def power_law_fit(points: Sequence[Tuple[float, float]]) -> PowerLawFit:
    """Fit y = a N^gamma by ordinary least squares on (log N, log y)."""
    if len(points) < FIT_MIN_POINTS:
        raise ValueError(f"Power law fit needs at least {FIT_MIN_POINTS} points, got {len(points)}")
    n = np.array([point[0] for point in points], dtype=float)
    y = np.array([point[1] for point in points], dtype=float)
    if np.any(n <= 0) or not np.all(np.isfinite(n)):
        raise ValueError("Power law fit needs positive, finite N values")
    if np.any(~(y > 0)) or not np.all(np.isfinite(y)):
        raise ValueError("Power law fit needs positive, finite y values")
    if len(np.unique(n)) != len(n):
        raise ValueError("Power law fit needs distinct N values")

    log_n, log_y = np.log(n), np.log(y)
    regression = linregress(log_n, log_y)
    residuals = log_y - (regression.intercept + regression.slope * log_n)
    ss_res = float(residuals @ residuals)
    ss_tot = float(((log_y - log_y.mean()) ** 2).sum())
    r2 = 1.0 if ss_tot == 0 else min(1.0, max(0.0, 1.0 - ss_res / ss_tot))
    fit = PowerLawFit(
        prefactor=math.exp(regression.intercept),
        gamma=float(regression.slope),
        r2=r2,
        n_range=(float(n.min()), float(n.max())),
        points=len(points),
    )
    log.debug("Fitted %.6g * N^%.6f with R^2 = %.8f over %d points", fit.prefactor, fit.gamma, fit.r2, fit.points)
    return fit


def improvement_db(qfi: float, N: int) -> float:
    """Return 10 log10(F_Q / N), the gain over the standard quantum limit."""
    if not qfi > 0 or N < 1:
        raise ValueError(f"Improvement needs F_Q > 0 and N >= 1, got F_Q={qfi!r}, N={N}")
    return 10.0 * math.log10(qfi / N)


def qcrb_curve(
    n_min: int,
    n_max: int,
    points: int,
    ctx: EstimationContext = EstimationContext(),
    frame: Frame = "lab",
    pbar: bool = False,
) -> List[QcrbRow]:
    """Return SQL, HL and Dicke QCRB precisions over log-spaced even N."""
    grid = even_grid(n_min, n_max, points)

    def _row(N: int) -> QcrbRow:
        qfi = qfi_dicke_fast(N, frame=frame)
        return QcrbRow(
            N=N,
            dk_sql=1.0 / (ctx.scale * math.sqrt(N)),
            dk_hl=hl_bound(ctx.model_copy(update={"N": N, "j": 1.0})),
            dk_dicke=qcrb(qfi, ctx),
            improvement_db=improvement_db(qfi, N),
        )

    rows = parallel_map(_row, grid, desc="QCRB curve", pbar=pbar)
    log.info("Computed QCRB curve for %d values of N in [%d, %d]", len(rows), rows[0].N, rows[-1].N)
    return rows


def wigner_eckart_diag(j: SpinLike, m: SpinLike, reduced: float = 1.0) -> float:
    """Return <j,m|T_0^(2)|j,m> = [3m^2 - j(j+1)] <j||T^(2)||j> / sqrt((2j+3)(j+1)(2j+1)j(2j-1))."""
    spin, magnetic = parse_spin(j), parse_spin(m, signed=True)
    if spin < 1:
        raise ClosedFormUndefinedError(f"Rank-2 tensor has no diagonal element for j={spin} < 1")
    if abs(magnetic) > spin or (spin - magnetic).denominator != 1:
        raise ValueError(f"Invalid quantum number m={magnetic} for spin j={spin}")
    numerator = 3 * magnetic * magnetic - spin * (spin + 1)
    denominator = (2 * spin + 3) * (spin + 1) * (2 * spin + 1) * spin * (2 * spin - 1)
    return float(numerator) * reduced / math.sqrt(denominator)


def kappa_to_c02(inp: SensitivityInput) -> float:
    """Return C_0^(2) = (delta_kappa / 2 pi) Delta(j_z^2) / (Delta E / (h C_0^(2)))."""
    return inp.delta_kappa_over_2pi * inp.jz2_fluct / inp.energy_ratio


def improvement_ratios(N: int, baseline: int = 2) -> ImprovementRatios:
    """Return sqrt(N) and N gain factors, raw and relative to `baseline` uncorrelated particles."""
    if N < 1 or baseline < 1:
        raise ValueError(f"Particle counts must be positive, got N={N}, baseline={baseline}")
    return ImprovementRatios(
        N=N,
        baseline=baseline,
        sql_factor=math.sqrt(N),
        hl_factor=float(N),
        sql_vs_baseline=math.sqrt(N / baseline),
        hl_vs_baseline=N / baseline,
    )