import math

import pytest
from hypothesis import given, strategies as st

from camcim.device import (CellState, ReadPulseSchedule, StringImage, VariationModel, cell_conducts,
                           string_current)
from camcim.errors import ContractViolation


def test_cell_state_bounds():
    CellState(0, 2)
    CellState(2, 3)
    with pytest.raises(ContractViolation):
        CellState(2, 2)
    with pytest.raises(ContractViolation):
        CellState(-1, 3)
    with pytest.raises(ContractViolation):
        CellState(0, 1)


@given(st.integers(2, 8).flatmap(lambda m: st.tuples(st.just(m), st.integers(0, m - 1))))
def test_pulse_sum_counts_conducting_pulses(ml):
    m, level = ml
    cell = CellState(level, m)
    assert cell.pulse_sum == sum(cell_conducts(cell, j) for j in range(m - 1))


def test_pulse_out_of_range():
    with pytest.raises(ContractViolation):
        cell_conducts(CellState(0, 3), 2)


def test_schedule_must_increase():
    assert ReadPulseSchedule.for_states(4).pulse_levels == (0, 1, 2)
    with pytest.raises(ContractViolation):
        ReadPulseSchedule((1, 1))


def _string(cim_level=0, m=3):
    return StringImage((CellState(1, 2),), (CellState(cim_level, m), CellState(1, m)), (3, 1, 7))


def test_string_current_noiseless_is_drive():
    assert string_current(_string(), 0, 2.0, VariationModel(), True) == 2.0


def test_string_gated_by_cam_is_exactly_zero():
    assert string_current(_string(), 1, 2.0, VariationModel(0.3, 5), False) == 0.0


def test_string_off_when_selected_cell_off():
    assert string_current(_string(cim_level=2), 1, 2.0, VariationModel(0.3, 5), True) == 0.0


def test_unselected_layers_pass():
    # layer 1 holds a high state but is unselected, so it does not block layer 0
    assert string_current(_string(), 0, 1.0, VariationModel(), True, cim_layer=0) == 1.0


def test_variation_is_reproducible_and_cell_specific():
    v = VariationModel(0.15, 42)
    a = v.epsilon(1, 2, 3, 4)
    assert a == v.epsilon(1, 2, 3, 4)
    assert a != v.epsilon(1, 2, 3, 5)
    assert VariationModel(0.0, 42).epsilon(1, 2, 3, 4) == 0.0


def test_variation_statistics():
    v = VariationModel(0.2, 9)
    eps = [v.epsilon(b, 0, i, 0) for b in range(20) for i in range(200)]
    mean = sum(eps) / len(eps)
    std = math.sqrt(sum((e - mean) ** 2 for e in eps) / len(eps))
    assert abs(mean) < 0.01
    assert abs(std - 0.2) < 0.01


def test_negative_sigma_rejected():
    with pytest.raises(ContractViolation):
        VariationModel(-0.1)
