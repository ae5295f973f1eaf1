import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from uuvtrack.shunting import (
    RK4_RATE_LIMIT,
    ShuntingBank,
    ShuntingParams,
    ShuntingState,
    StepTooLarge,
    equilibrium,
    shunting_derivative,
    shunting_step,
)

KIN = ShuntingParams(a=4.0, b=1.0, d=1.0)
DYN = ShuntingParams(a=3.0, b=1.0, d=1.0)


def test_params_validate():
    with pytest.raises(ValueError):
        ShuntingParams(a=0.0, b=1.0, d=1.0)
    with pytest.raises(ValueError):
        ShuntingParams(a=1.0, b=-1.0, d=1.0)


def test_derivative_zero_at_origin():
    assert shunting_derivative(KIN, 0.0, 0.0) == 0.0


def test_derivative_splits_excitation_and_inhibition():
    # positive input only feeds the (b - L) term, negative only the (d + L)
    assert shunting_derivative(KIN, 0.0, 2.0) == pytest.approx(2.0)
    assert shunting_derivative(KIN, 0.0, -2.0) == pytest.approx(-2.0)


def test_equilibrium_values():
    # b*e/(a+e) for positive input
    assert equilibrium(KIN, 1.0) == pytest.approx(0.2)
    assert equilibrium(DYN, 1.0) == pytest.approx(0.25)
    # odd symmetry when b == d
    assert equilibrium(KIN, -1.0) == pytest.approx(-0.2)
    assert equilibrium(KIN, 0.0) == 0.0


def test_equilibrium_saturates_inside_bounds():
    assert equilibrium(KIN, 1e9) < KIN.b
    assert equilibrium(KIN, -1e9) > -KIN.d


def test_step_converges_to_equilibrium():
    st_ = ShuntingState(0.0)
    for _ in range(5000):
        st_ = shunting_step(st_, KIN, 1.0, 0.01)
    assert st_.L == pytest.approx(0.2, abs=1e-9)


def test_step_against_fine_euler():
    """Independent oracle: explicit Euler at 1e-6 for a constant input."""
    st_ = ShuntingState(0.0)
    for _ in range(100):
        st_ = shunting_step(st_, DYN, 0.7, 0.01)

    L, h = 0.0, 1e-6
    for _ in range(1_000_000):
        L += h * (-DYN.a * L + (DYN.b - L) * 0.7)
    # the first-order oracle itself carries ~3e-8 at this step size
    assert st_.L == pytest.approx(L, abs=1e-7)


def test_step_too_large_guard():
    st_ = ShuntingState(0.0)
    # (a + |e|) * dt over the stability limit must raise, not integrate
    bad_e = RK4_RATE_LIMIT / 0.01 - KIN.a + 1.0
    with pytest.raises(StepTooLarge):
        shunting_step(st_, KIN, bad_e, 0.01)


def test_effective_decay_rate():
    # with input e the linearized decay rate is a + |e|; check the discrete
    # contraction factor against exp over one step
    st_ = ShuntingState(0.1)
    out = shunting_step(st_, KIN, 0.0, 0.01)
    # RK4 truncation is O((a*dt)^5), well inside 1e-8 here
    assert out.L == pytest.approx(0.1 * math.exp(-KIN.a * 0.01), abs=1e-8)


@settings(max_examples=200, deadline=None)
@given(
    a=st.floats(min_value=0.5, max_value=10.0),
    b=st.floats(min_value=0.1, max_value=5.0),
    d=st.floats(min_value=0.1, max_value=5.0),
    e=st.lists(st.floats(min_value=-100.0, max_value=100.0),
               min_size=1, max_size=50),
)
def test_bounded_for_any_input_history(a, b, d, e):
    p = ShuntingParams(a=a, b=b, d=d)
    st_ = ShuntingState(0.0)
    dt = min(0.01, 2.5 / (a + 100.0))
    for ei in e:
        st_ = shunting_step(st_, p, ei, dt)
        assert -p.d < st_.L < p.b


def test_bank_matches_scalar_channels():
    bank = ShuntingBank.from_arrays([4.0, 3.0, 2.0], [1.0, 1.0, 0.5],
                                    [1.0, 2.0, 0.5])
    states = [ShuntingState(0.0)] * 3
    params = [ShuntingParams(4.0, 1.0, 1.0), ShuntingParams(3.0, 1.0, 2.0),
              ShuntingParams(2.0, 0.5, 0.5)]
    rng = np.random.default_rng(11)
    for _ in range(300):
        e = rng.uniform(-3.0, 3.0, 3)
        out = bank.step(e, 0.01)
        states = [shunting_step(s, p, ei, 0.01)
                  for s, p, ei in zip(states, params, e)]
        assert np.allclose(out, [s.L for s in states], atol=1e-14)


def test_bank_guard_propagates():
    bank = ShuntingBank.from_arrays([4.0], [1.0], [1.0])
    with pytest.raises(StepTooLarge):
        bank.step(np.array([1e4]), 0.01)


def test_bank_step_returns_copy():
    bank = ShuntingBank.from_arrays([4.0], [1.0], [1.0])
    out = bank.step(np.array([1.0]), 0.01)
    out[0] = 99.0
    assert bank.L[0] != 99.0
