import pytest
from hypothesis import given, strategies as st

from camcim.device import CellState
from camcim.encoding import (CodeSpace, WeightCode, decode_input, decode_weight, encode_input,
                             encode_weight, signed_product_model, thermometer_levels)
from camcim.errors import CodeRangeError, ContractViolation, CorruptCodeError

spaces = st.sampled_from([CodeSpace(S, m, L) for S in (1, 2, 4, 8) for m in (2, 3, 4, 5, 8) for L in (1, 2, 3)
                          if (S * (m - 1)) % 2 == 0])


@given(spaces.flatmap(lambda sp: st.tuples(st.just(sp), st.integers(-sp.w_max, sp.w_max))))
def test_weight_roundtrip_and_complement(case):
    space, w = case
    code = encode_weight(w, space)
    assert decode_weight(code) == w
    assert code.pos_sum + code.neg_sum == space.full_count
    assert code.pos_sum - code.neg_sum == 2 * w


@given(spaces.flatmap(lambda sp: st.tuples(st.just(sp), st.integers(-sp.L, sp.L),
                                           st.integers(-sp.w_max, sp.w_max))))
def test_product_model_matches_integer_product(case):
    space, x, w = case
    assert signed_product_model(x, w, space) == x * w


@given(spaces.flatmap(lambda sp: st.tuples(st.just(sp), st.integers(-sp.L, sp.L))))
def test_input_roundtrip(case):
    space, x = case
    assert decode_input(encode_input(x, space)) == x


def test_range_law():
    assert CodeSpace(4, 2).weight_range == range(-2, 3)
    assert CodeSpace(4, 3).weight_range == range(-4, 5)
    assert CodeSpace(4, 4).w_max == 6


def test_documented_example_decodes_to_plus_two():
    space = CodeSpace(4, 3)
    code = encode_weight(2, space)
    assert code.pos_sum == 6


def test_thermometer_fills_in_ssl_order():
    space = CodeSpace(4, 3)
    assert thermometer_levels(0, space) == (2, 2, 2, 2)
    assert thermometer_levels(3, space) == (0, 1, 2, 2)
    assert thermometer_levels(8, space) == (0, 0, 0, 0)


def test_out_of_range_rejected():
    with pytest.raises(CodeRangeError):
        encode_weight(3, CodeSpace(4, 2))
    with pytest.raises(CodeRangeError):
        encode_input(3, CodeSpace(4, 2, 2))


def test_odd_full_count_rejected():
    with pytest.raises(ContractViolation):
        CodeSpace(3, 2)


def test_corrupt_code_detected():
    space = CodeSpace(4, 3)
    code = encode_weight(1, space)
    broken = WeightCode(space, code.pos_block_levels, (CellState(0, 3),) * 4)
    with pytest.raises(CorruptCodeError):
        decode_weight(broken)
