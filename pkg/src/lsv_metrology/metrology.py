"""
Quantum Fisher information and the precision bounds derived from it.

For a pure probe |psi> and generator G the QFI is F_Q = 4 Var(G), and estimating
kappa from nu repetitions of duration T is bounded by

    delta_kappa >= 1 / (sqrt(nu) * T * sqrt(F_Q))

Two frames are supported for the balanced Dicke state: "lab" uses the diagonal
generator sum_i (j_z^(i))^2, "ramsey" the generator sum_i (j_y^(i))^2 that the
probe sees between the two pi/2 pulses of a Ramsey sequence.
"""

# SPDX-License-Identifier: Apache-2.0

import logging
import math
from fractions import Fraction
from typing import Literal, Optional, Union

import numpy as np
import pydantic

from lsv_metrology import VARIANCE_CLAMP_TOL
from lsv_metrology.errors import DegenerateGeneratorError, UndefinedPrecisionError
from lsv_metrology.fock_space import (
    CollectiveOperator,
    OperatorKind,
    StateVector,
    apply_rotation,
    build_operator,
    expectation,
)
from lsv_metrology.states import CatState, dicke_probabilities
from lsv_metrology.utils import parse_spin

log = logging.getLogger(__name__)

Frame = Literal["lab", "ramsey"]
Protocol = Literal["qcrb", "parity", "moment"]
FRAMES = ("lab", "ramsey")


class EstimationContext(pydantic.BaseModel):
    """Probe duration T (seconds), trials nu, particle count N and single-particle spin j."""

    model_config = pydantic.ConfigDict(frozen=True)

    T: float = pydantic.Field(1.0, gt=0)
    nu: int = pydantic.Field(1, ge=1)
    N: int = pydantic.Field(1, ge=1)
    j: float = pydantic.Field(1.0, ge=0)

    @pydantic.field_validator("j", mode="before")
    @classmethod
    def _spin(cls, value):
        return float(parse_spin(value))

    @property
    def scale(self) -> float:
        """Return T sqrt(nu), the factor every precision is divided by."""
        return self.T * math.sqrt(self.nu)


class PrecisionResult(pydantic.BaseModel):
    """Precision of one protocol at one operating point.

    figure holds F_Q for the QCRB and |d<A>/d(kappa t)| for measurement protocols.
    An unbounded result has delta_kappa = inf.
    """

    model_config = pydantic.ConfigDict(frozen=True)

    N: int = pydantic.Field(ge=1)
    protocol: Protocol
    figure: float = pydantic.Field(ge=0)
    delta_kappa: float = pydantic.Field(gt=0)
    kt: Optional[float] = None
    T: float = pydantic.Field(gt=0)
    nu: int = pydantic.Field(ge=1)
    unbounded: bool = False

    @pydantic.model_validator(mode="after")
    def _unbounded_flag(self):
        if self.unbounded != math.isinf(self.delta_kappa):
            raise ValueError("Precision must be infinite exactly when flagged unbounded")
        return self


def _clamped_variance(second: float, mean: float, what: str) -> float:
    variance = second - mean * mean
    if variance < 0:
        if variance < -VARIANCE_CLAMP_TOL * max(1.0, second):
            raise UndefinedPrecisionError(f"Variance of {what} is negative: {variance!r}")
        variance = 0.0
    return variance


def qfi_pure(state: StateVector, generator: CollectiveOperator) -> float:
    """Return F_Q = 4 (<G^2> - <G>^2) for a pure state."""
    mean = expectation(state, generator)
    second = float(np.linalg.norm(generator.apply(state.amplitudes)) ** 2)
    return 4.0 * _clamped_variance(second, mean, generator.kind)


def qfi_cat(cat: CatState) -> float:
    """Return F_Q = 4 |w_a|^2 |w_b|^2 gap^2, which is gap^2 for equal weights."""
    p_a = abs(cat.weights[0]) ** 2
    p_b = abs(cat.weights[1]) ** 2
    return 4.0 * p_a * p_b / (p_a + p_b) ** 2 * cat.gap**2


def qfi_dicke_fast(N: int, frame: Frame = "lab") -> float:
    """Return the QFI of the balanced Dicke state from its occupation distribution only.

    With k the number of (m=+1, m=-1) pairs, "lab" gives 4 Var(2k) and "ramsey" gives
    4 Var(k) + 2 E[k(k+1)], the variance of sum_i (j_y^(i))^2 on the same state.
    """
    if frame not in FRAMES:
        raise ValueError(f"Unknown frame {frame!r}, expected one of {', '.join(FRAMES)}")
    probabilities = dicke_probabilities(N)
    k = np.arange(len(probabilities), dtype=float)
    mean = float(probabilities @ k)
    variance = float(probabilities @ (k - mean) ** 2)
    if frame == "lab":
        return 16.0 * variance
    return 4.0 * variance + 2.0 * float(probabilities @ (k * (k + 1)))


def probe_qfi(probe: Union[StateVector, CatState], frame: Frame = "lab") -> float:
    """Return the QFI of a probe for estimating kappa.

    Cat branches are generator eigenstates in either frame, so cats ignore the frame.
    The "ramsey" frame of a state vector rotates it by pi/2 about x before taking the
    variance of H.
    """
    if isinstance(probe, CatState):
        return qfi_cat(probe)
    if frame not in FRAMES:
        raise ValueError(f"Unknown frame {frame!r}, expected one of {', '.join(FRAMES)}")
    if frame == "ramsey":
        probe = apply_rotation(probe, "x", math.pi / 2)
    return qfi_pure(probe, build_operator(probe.basis, OperatorKind.H))


def qcrb(qfi: float, ctx: EstimationContext) -> float:
    """Return the quantum Cramer-Rao bound 1 / (sqrt(nu) T sqrt(F_Q))."""
    if not qfi > 0:
        raise UndefinedPrecisionError(f"Quantum Fisher information must be positive, got {qfi!r}")
    return 1.0 / (ctx.scale * math.sqrt(qfi))


def qcrb_result(qfi: float, ctx: EstimationContext) -> PrecisionResult:
    return PrecisionResult(N=ctx.N, protocol="qcrb", figure=qfi, delta_kappa=qcrb(qfi, ctx), T=ctx.T, nu=ctx.nu)


def generator_gap(j: float) -> float:
    """Return max(m^2) - min(m^2) over m = -j..j."""
    spin = parse_spin(j)
    smallest = 0 if spin.denominator == 1 else Fraction(1, 4)
    return float(spin * spin - smallest)


def hl_bound(ctx: EstimationContext) -> float:
    """Return the Heisenberg limit 1 / (sqrt(nu) T N |lambda_max - lambda_min|) of the generator."""
    gap = generator_gap(ctx.j)
    if gap == 0:
        raise DegenerateGeneratorError(f"(j_z)^2 is constant for spin j={ctx.j}, kappa is not identifiable")
    return 1.0 / (ctx.scale * ctx.N * gap)


def snr_gain(cat: CatState, reference: CatState, copies: Optional[int] = None) -> float:
    """Return the signal-to-noise gain of cat over `copies` uncorrelated reference probes.

    By default the reference is repeated until the particle numbers match.
    """
    if copies is None:
        if cat.N % reference.N:
            raise ValueError(f"Cannot match N={cat.N} with copies of a N={reference.N} reference")
        copies = cat.N // reference.N
    if copies < 1:
        raise ValueError(f"Number of reference copies must be positive, got {copies}")
    reference_qfi = copies * qfi_cat(reference)
    if reference_qfi <= 0:
        raise UndefinedPrecisionError("Reference probe has no Fisher information")
    gain = math.sqrt(qfi_cat(cat) / reference_qfi)
    log.debug("SNR gain of %s over %d x %s: %r", cat.branch_a.label, copies, reference.branch_a.label, gain)
    return gain
