"""
Measurement protocols for kappa: NOON parity readout and the J_x^2 moment method.

Both protocols infer kappa t from the mean of an observable A and report the
error-propagation precision

    delta_kappa = Delta A / (T sqrt(nu) |d<A>/d(kappa t)|)

The parity path simulates NOON -> exp(-i kappa t H) -> 50:50 beam splitter between
the m=+1 and m=0 modes -> (-1)^n0. The moment path evolves the balanced Dicke state
under exp(-i kappa t H) and measures J_x^2 directly, which equals measuring J_z^2
after a pi/2 pulse.
"""

# SPDX-License-Identifier: Apache-2.0

import functools
import logging
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pydantic
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from lsv_metrology import (
    DERIVATIVE_CROSSCHECK_RTOL,
    FD_STEP,
    MIN_MOMENT_GRID_POINTS,
    MOMENT_VARIANCE_CLAMP_TOL,
    ROTATION_TOL,
    SLOPE_FLOOR,
)
from lsv_metrology.analysis import PowerLawFit, power_law_fit
from lsv_metrology.errors import ClosedFormUndefinedError, UnboundedPrecisionError, UndefinedPrecisionError
from lsv_metrology.fock_space import (
    OperatorKind,
    StateVector,
    apply_diagonal_phase,
    build_operator,
    evolve,
    expectation,
    expm_action,
)
from lsv_metrology.metrology import EstimationContext, PrecisionResult
from lsv_metrology.states import SQRT_HALF, dicke_balanced, noon_state
from lsv_metrology.utils import parallel_map

log = logging.getLogger(__name__)


class GridSpec(pydantic.BaseModel):
    """Operating points kappa t in [kt_min, kt_max] and whether to refine the optimum."""

    model_config = pydantic.ConfigDict(frozen=True)

    kt_min: float = pydantic.Field(0.0, ge=0)
    kt_max: float = pydantic.Field(math.pi / 2, ge=0)
    points: int = pydantic.Field(MIN_MOMENT_GRID_POINTS, ge=1)
    refine: bool = True

    @pydantic.model_validator(mode="after")
    def _ordered(self):
        if self.kt_max < self.kt_min:
            raise ValueError(f"Empty grid: kt_max={self.kt_max!r} is below kt_min={self.kt_min!r}")
        return self

    def values(self) -> np.ndarray:
        return np.linspace(self.kt_min, self.kt_max, self.points)

    def open_values(self) -> np.ndarray:
        """Return the grid without kappa t = 0, where every moment signal is flat."""
        if self.kt_min > 0:
            return self.values()
        return np.linspace(self.kt_max / self.points, self.kt_max, self.points)


class ParityPoint(pydantic.BaseModel):
    kt: float
    parity_sim: float
    parity_closed_form: Optional[float] = None
    abs_diff: Optional[float] = None

    @pydantic.field_validator("parity_sim")
    @classmethod
    def _bounded(cls, value):
        if abs(value) > 1.0 + 1e-10:
            raise ValueError(f"Parity expectation {value!r} outside [-1, 1]")
        return value


class ParityScan(pydantic.BaseModel):
    N: int
    points: List[ParityPoint]

    @property
    def max_abs_diff(self) -> Optional[float]:
        diffs = [point.abs_diff for point in self.points if point.abs_diff is not None]
        return max(diffs) if diffs else None


class MomentPoint(pydantic.BaseModel):
    kt: float
    mean_jx2: float
    var_jx2: float = pydantic.Field(ge=0)
    slope: float
    slope_commutator: float
    delta_kappa: float = pydantic.Field(gt=0)
    unbounded: bool = False


class MomentScan(pydantic.BaseModel):
    N: int
    points: List[MomentPoint]
    optimum: Optional[PrecisionResult] = None


class MomentSweep(pydantic.BaseModel):
    optima: List[PrecisionResult]
    fit: PowerLawFit


@functools.lru_cache(maxsize=32)
def _two_mode_splitter(N: int) -> sp.csr_matrix:
    """Return (a1^dag a0 + a0^dag a1)/2 on |n1 = N - i, n0 = i>, i = 0..N."""
    i = np.arange(1, N + 1)
    values = (np.sqrt((N - i + 1.0) * i) / 2.0).astype(complex)
    return sp.diags([values, values], [-1, 1], shape=(N + 1, N + 1), format="csr")


def parity_signal(N: int, kt: float, tol: float = ROTATION_TOL) -> float:
    """Return <(-1)^n0> of the NOON readout, simulated in the m=+1, m=0 subspace."""
    if N < 1:
        raise ValueError(f"Parity readout needs at least one particle, got N={N}")
    n_zero = np.arange(N + 1)
    amplitudes = np.zeros(N + 1, dtype=complex)
    amplitudes[0] = amplitudes[N] = SQRT_HALF
    amplitudes *= np.exp(-1j * kt * (N - n_zero))
    amplitudes = expm_action(_two_mode_splitter(N), amplitudes, math.pi / 2, tol=tol)
    parity = 1 - 2 * (n_zero % 2)
    return float(np.vdot(amplitudes, parity * amplitudes).real)


def parity_signal_full(N: int, kt: float, tol: float = ROTATION_TOL) -> float:
    """Return the same parity signal from the full three-mode Fock space."""
    state = apply_diagonal_phase(noon_state(N).to_state_vector(), kt)
    state = evolve(state, build_operator(state.basis, OperatorKind.BX10), math.pi / 2, tol=tol)
    return expectation(state, build_operator(state.basis, OperatorKind.PARITY0))


def _parity_sign(N: int) -> int:
    if N % 2:
        raise ClosedFormUndefinedError(f"Closed-form parity (-1)^(N/2) cos(N kt) needs even N, got N={N}")
    return -1 if (N // 2) % 2 else 1


def parity_closed_form(N: int, kt: float) -> float:
    """Return (-1)^(N/2) cos(N kt)."""
    return _parity_sign(N) * math.cos(N * kt)


def parity_precision(N: int, kt: float, ctx: EstimationContext) -> PrecisionResult:
    """Return the parity readout precision at kt, 1/(N T sqrt(nu)) wherever the slope is finite."""
    sign = _parity_sign(N)
    slope = -sign * N * math.sin(N * kt)
    if abs(slope) < SLOPE_FLOOR * N:
        raise UnboundedPrecisionError(f"Parity slope vanishes at kt={kt!r} for N={N}")
    # sqrt(1 - <P>^2) without cancellation
    spread = abs(math.sin(N * kt))
    delta_kappa = spread / (ctx.scale * abs(slope))
    return PrecisionResult(
        N=N, protocol="parity", figure=abs(slope), delta_kappa=delta_kappa, kt=kt, T=ctx.T, nu=ctx.nu
    )


def parity_scan(N: int, grid: GridSpec, tol: float = ROTATION_TOL, pbar: bool = False) -> ParityScan:
    """Return simulated and closed-form parity on the grid; the closed form is left empty for odd N."""

    def _point(kt: float) -> ParityPoint:
        simulated = parity_signal(N, kt, tol=tol)
        if N % 2:
            return ParityPoint(kt=kt, parity_sim=simulated)
        closed = parity_closed_form(N, kt)
        return ParityPoint(kt=kt, parity_sim=simulated, parity_closed_form=closed, abs_diff=abs(simulated - closed))

    points = parallel_map(_point, [float(kt) for kt in grid.values()], desc="Parity scan", pbar=pbar)
    scan = ParityScan(N=N, points=points)
    log.info("Parity scan for N=%d over %d points, max. deviation %r", N, len(points), scan.max_abs_diff)
    return scan


class _MomentProbe:
    """Evaluates J_x^2 moments of exp(-i kt H) |state>."""

    def __init__(self, state: StateVector):
        self.state = state
        self.jx = build_operator(state.basis, OperatorKind.JX)
        self.h_diagonal = (state.basis.n_plus + state.basis.n_minus).astype(float)

    def evolved(self, kt: float) -> np.ndarray:
        return np.exp(-1j * kt * self.h_diagonal) * self.state.amplitudes

    def mean(self, kt: float) -> float:
        return float(np.linalg.norm(self.jx.apply(self.evolved(kt))) ** 2)

    def point(self, kt: float, ctx: EstimationContext) -> MomentPoint:
        psi = self.evolved(kt)
        jx_psi = self.jx.apply(psi)
        jx2_psi = self.jx.apply(jx_psi)
        mean = float(np.linalg.norm(jx_psi) ** 2)
        fourth = float(np.linalg.norm(jx2_psi) ** 2)
        variance = fourth - mean * mean
        if variance < 0:
            if variance < -MOMENT_VARIANCE_CLAMP_TOL * max(1.0, fourth):
                raise UndefinedPrecisionError(f"Variance of Jx^2 is negative at kt={kt!r}: {variance!r}")
            variance = 0.0

        step = FD_STEP * max(1.0, abs(kt))
        slope = (self.mean(kt + step) - self.mean(kt - step)) / (2 * step)
        # d<A>/d(kt) = i <[H, A]> = -2 Im <H psi | A psi>
        slope_commutator = -2.0 * float(np.vdot(self.h_diagonal * psi, jx2_psi).imag)
        mismatch = abs(slope - slope_commutator)
        if abs(slope_commutator) > 1e-8 and mismatch > DERIVATIVE_CROSSCHECK_RTOL * abs(slope_commutator):
            log.warning(
                "Finite difference slope %r and commutator slope %r disagree at kt=%r", slope, slope_commutator, kt
            )

        unbounded = abs(slope) < SLOPE_FLOOR * max(1.0, abs(mean))
        if unbounded:
            delta_kappa = math.inf
        else:
            delta_kappa = math.sqrt(variance) / (ctx.scale * abs(slope))
            if delta_kappa == 0:
                raise UndefinedPrecisionError(f"Jx^2 has no spread at kt={kt!r}, error propagation is undefined")
        return MomentPoint(
            kt=kt,
            mean_jx2=mean,
            var_jx2=variance,
            slope=slope,
            slope_commutator=slope_commutator,
            delta_kappa=delta_kappa,
            unbounded=unbounded,
        )


def _moment_result(point: MomentPoint, N: int, ctx: EstimationContext) -> PrecisionResult:
    return PrecisionResult(
        N=N,
        protocol="moment",
        figure=abs(point.slope),
        delta_kappa=point.delta_kappa,
        kt=point.kt,
        T=ctx.T,
        nu=ctx.nu,
        unbounded=point.unbounded,
    )


def moment_precision(state: StateVector, kt: float, ctx: EstimationContext) -> PrecisionResult:
    """Return the J_x^2 error-propagation precision at one operating point; unbounded if the slope vanishes."""
    point = _MomentProbe(state).point(kt, ctx)
    return _moment_result(point, state.basis.N, ctx)


def _refine_optimum(
    probe: _MomentProbe, ctx: EstimationContext, points: Sequence[MomentPoint], index: int
) -> Optional[MomentPoint]:
    """Golden-section search between the neighbours of an interior grid minimum."""
    if index == 0 or index == len(points) - 1:
        return None
    left, best, right = points[index - 1], points[index], points[index + 1]
    if not (best.delta_kappa < left.delta_kappa and best.delta_kappa < right.delta_kappa):
        return None

    def objective(kt: float) -> float:
        return probe.point(kt, ctx).delta_kappa

    try:
        result = minimize_scalar(objective, bracket=(left.kt, best.kt, right.kt), method="golden")
    except ValueError as e:
        log.debug("Golden-section refinement skipped: %s", e)
        return None
    if not left.kt <= result.x <= right.kt:
        return None
    refined = probe.point(float(result.x), ctx)
    log.debug(
        "Refined optimum from kt=%r (%r) to kt=%r (%r)", best.kt, best.delta_kappa, refined.kt, refined.delta_kappa
    )
    return refined if refined.delta_kappa < best.delta_kappa else None


def moment_scan(
    state: StateVector, grid: GridSpec, ctx: EstimationContext, parallel: bool = True, pbar: bool = False
) -> MomentScan:
    """Scan the J_x^2 protocol over grid.open_values() and locate the optimal operating point.

    The optimum is None when every grid point is unbounded.
    """
    if grid.points < MIN_MOMENT_GRID_POINTS:
        log.warning("Moment grid has %d points, at least %d are recommended", grid.points, MIN_MOMENT_GRID_POINTS)
    probe = _MomentProbe(state)
    values = [float(kt) for kt in grid.open_values()]
    if parallel:
        points = parallel_map(lambda kt: probe.point(kt, ctx), values, desc="Moment scan", pbar=pbar)
    else:
        points = [probe.point(kt, ctx) for kt in values]

    bounded = [index for index, point in enumerate(points) if not point.unbounded]
    if not bounded:
        return MomentScan(N=state.basis.N, points=points)
    index = min(bounded, key=lambda i: points[i].delta_kappa)
    best = points[index]
    if grid.refine:
        best = _refine_optimum(probe, ctx, points, index) or best
    return MomentScan(N=state.basis.N, points=points, optimum=_moment_result(best, state.basis.N, ctx))


def optimal_moment_precision(
    N: int, ctx: EstimationContext, grid: Optional[GridSpec] = None, parallel: bool = True
) -> PrecisionResult:
    """Return the best J_x^2 precision of the balanced Dicke state over the grid."""
    scan = moment_scan(dicke_balanced(N), grid or GridSpec(), ctx, parallel=parallel)
    if scan.optimum is None:
        raise UnboundedPrecisionError(f"Every grid point has a vanishing slope for N={N}")
    return scan.optimum


def optimal_moment_sweep(
    Ns: Sequence[int], ctx: EstimationContext, grid: Optional[GridSpec] = None, pbar: bool = False
) -> MomentSweep:
    """Return the optimum for each N (in input order) and the fit delta_kappa = a N^gamma."""
    grid = grid or GridSpec()

    def _optimum(N: int) -> PrecisionResult:
        return optimal_moment_precision(N, ctx.model_copy(update={"N": N}), grid, parallel=False)

    optima = parallel_map(_optimum, list(Ns), desc="Moment sweep", pbar=pbar)
    fit = power_law_fit([(result.N, result.delta_kappa) for result in optima])
    log.info("Moment optimum scaling: %.4g * N^%.4f (R^2 = %.6f)", fit.prefactor, fit.gamma, fit.r2)
    return MomentSweep(optima=optima, fit=fit)


def moment_fit_terms(fit: PowerLawFit) -> Tuple[float, float]:
    """Return (a, b) of delta_kappa = a / N^b."""
    return fit.prefactor, -fit.gamma
