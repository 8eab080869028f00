"""Tests for scaling fits, QCRB curves and the sensitivity conversion."""

# SPDX-License-Identifier: Apache-2.0

import math

import pydantic
import pytest

from lsv_metrology import FIG1_DEFAULTS, FIG2_DEFAULTS
from lsv_metrology.analysis import (
    SensitivityInput,
    improvement_db,
    improvement_ratios,
    kappa_to_c02,
    power_law_fit,
    qcrb_curve,
    wigner_eckart_diag,
)
from lsv_metrology.errors import ClosedFormUndefinedError
from lsv_metrology.metrology import EstimationContext, qfi_dicke_fast
from lsv_metrology.utils import even_grid


def test_power_law_fit_exact():
    fit = power_law_fit([(N, 3.0 * N**2) for N in (2, 4, 8, 16)])
    assert fit.prefactor == pytest.approx(3.0, rel=1e-12)
    assert fit.gamma == pytest.approx(2.0, rel=1e-12)
    assert fit.r2 == pytest.approx(1.0, abs=1e-12)
    assert fit.n_range == (2.0, 16.0)
    assert fit.points == 4

    fit = power_law_fit([(N, 1.5 / math.sqrt(N)) for N in (10, 20, 40)])
    assert fit.gamma == pytest.approx(-0.5, rel=1e-12)
    assert fit.prefactor == pytest.approx(1.5, rel=1e-12)


def test_power_law_fit_constant_data():
    fit = power_law_fit([(1, 1.0), (2, 1.0), (3, 1.0)])
    assert fit.gamma == pytest.approx(0.0, abs=1e-12)
    assert fit.r2 == 1.0


def test_power_law_fit_scale_covariance():
    points = [(10, 3.1), (20, 5.3), (40, 9.8), (80, 21.0)]
    base = power_law_fit(points)
    scaled = power_law_fit([(N, 7.0 * y) for N, y in points])
    assert scaled.gamma == pytest.approx(base.gamma, rel=1e-12)
    assert scaled.prefactor == pytest.approx(7.0 * base.prefactor, rel=1e-12)
    assert scaled.r2 == pytest.approx(base.r2, rel=1e-9)
    assert 0 < base.r2 < 1


def test_power_law_fit_validation():
    with pytest.raises(ValueError, match="at least"):
        power_law_fit([(1, 1.0), (2, 2.0)])
    with pytest.raises(ValueError, match="y values"):
        power_law_fit([(1, 1.0), (2, 0.0), (3, 3.0)])
    with pytest.raises(ValueError, match="y values"):
        power_law_fit([(1, 1.0), (2, math.inf), (3, 3.0)])
    with pytest.raises(ValueError, match="N values"):
        power_law_fit([(0, 1.0), (2, 2.0), (3, 3.0)])
    with pytest.raises(ValueError, match="distinct"):
        power_law_fit([(2, 1.0), (2, 2.0), (3, 3.0)])


def test_improvement_db():
    assert improvement_db(100, 10) == pytest.approx(10.0)
    assert improvement_db(10, 10) == 0
    with pytest.raises(ValueError):
        improvement_db(0, 10)
    with pytest.raises(ValueError):
        improvement_db(5, 0)


def test_qcrb_curve_defaults():
    rows = qcrb_curve(*FIG1_DEFAULTS)
    assert len(rows) == 40
    assert rows[0].N == 2
    assert rows[-1].N == 10_000
    assert [row.N for row in rows] == sorted({row.N for row in rows})
    for row in rows:
        assert row.N % 2 == 0
        assert row.dk_hl <= row.dk_dicke <= row.dk_sql
        assert row.dk_sql == pytest.approx(1 / math.sqrt(row.N))
        assert row.dk_hl == pytest.approx(1 / row.N)
        assert row.improvement_db > 0


def test_qcrb_curve_single_row():
    rows = qcrb_curve(2, 2, 1)
    assert len(rows) == 1
    assert rows[0].N == 2
    assert rows[0].dk_dicke == pytest.approx(3 / (4 * math.sqrt(2)), rel=1e-12)
    assert rows[0].dk_sql == pytest.approx(1 / math.sqrt(2), rel=1e-12)


def test_qcrb_curve_context():
    rows = qcrb_curve(2, 20, 5, ctx=EstimationContext(T=2, nu=4))
    for row in rows:
        assert row.dk_sql == pytest.approx(1 / (4 * math.sqrt(row.N)))
        assert row.dk_dicke == pytest.approx(1 / (4 * math.sqrt(qfi_dicke_fast(row.N))))

    ramsey = qcrb_curve(2, 20, 5, frame="ramsey")
    assert ramsey[-1].dk_dicke == pytest.approx(1 / math.sqrt(qfi_dicke_fast(ramsey[-1].N, frame="ramsey")))


def test_dicke_qfi_scaling_fit():
    grid = even_grid(*FIG2_DEFAULTS)
    assert len(grid) == 25
    fit = power_law_fit([(N, qfi_dicke_fast(N, frame="ramsey")) for N in grid])
    assert 1.88 <= fit.gamma <= 2.0
    assert fit.r2 > 0.999
    assert fit.n_range == (10.0, 1000.0)

    lab = power_law_fit([(N, qfi_dicke_fast(N)) for N in grid])
    assert lab.gamma == pytest.approx(1.0, abs=0.05)


def test_wigner_eckart_diag():
    norm = math.sqrt(10 * 4.5 * 8 * 3.5 * 6)
    assert norm == pytest.approx(math.sqrt(7560))
    assert wigner_eckart_diag("7/2", "7/2") == pytest.approx(21 / math.sqrt(7560), rel=1e-12)
    assert wigner_eckart_diag("7/2", "1/2") == pytest.approx(-15 / math.sqrt(7560), rel=1e-12)
    assert wigner_eckart_diag("7/2", "-7/2", reduced=2.0) == pytest.approx(42 / math.sqrt(7560), rel=1e-12)
    assert wigner_eckart_diag(1, 0) == pytest.approx(-2 / math.sqrt(30), rel=1e-12)


def test_wigner_eckart_diag_validation():
    for j in ("1/2", 0):
        with pytest.raises(ClosedFormUndefinedError):
            wigner_eckart_diag(j, 0 if j == 0 else "1/2")
    with pytest.raises(ValueError):
        wigner_eckart_diag("7/2", "9/2")
    with pytest.raises(ValueError):
        wigner_eckart_diag("7/2", 1)


def test_kappa_to_c02():
    bound = kappa_to_c02(SensitivityInput(delta_kappa_over_2pi=1e-3, energy_ratio=8.6e15))
    assert bound == pytest.approx(1e-3 / 8.6e15, rel=1e-12)
    bound = kappa_to_c02(SensitivityInput(delta_kappa_over_2pi=1e-9, energy_ratio=8.6e15, jz2_fluct=1.0))
    assert bound == pytest.approx(1.16e-25, rel=3e-3)
    assert 5e-26 <= bound <= 2e-25
    assert kappa_to_c02(SensitivityInput(delta_kappa_over_2pi=0.0, energy_ratio=8.6e15)) == 0
    assert kappa_to_c02(SensitivityInput(delta_kappa_over_2pi=2.0, energy_ratio=4.0, jz2_fluct=3.0)) == 1.5
    with pytest.raises(pydantic.ValidationError):
        SensitivityInput(delta_kappa_over_2pi=1.0, energy_ratio=0)
    with pytest.raises(pydantic.ValidationError):
        SensitivityInput(delta_kappa_over_2pi=-1.0, energy_ratio=1.0)


def test_improvement_ratios():
    ratios = improvement_ratios(10_000)
    assert ratios.sql_factor == pytest.approx(100)
    assert ratios.hl_factor == 10_000
    assert ratios.sql_vs_baseline == pytest.approx(math.sqrt(5000))
    assert ratios.hl_vs_baseline == 5000
    with pytest.raises(ValueError):
        improvement_ratios(0)
