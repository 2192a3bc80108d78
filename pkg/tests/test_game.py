import math
import random

import pytest
from hypothesis import given, strategies as st

from dds.cost import DeviceProfile, ServerProfile, server_flops
from dds.game import (
    GameConfig,
    GameState,
    PriceBoard,
    allocate,
    closed_form_best_response,
    contraction_holds,
    device_iteration,
    gradient,
    momentum_step,
    price,
    resource_sniff,
    sniff_grid,
)
from dds.model import catalog_model
from dds.partition import direct_solver


def cfg(**kw):
    base = dict(gamma=1.0, learning_rate=0.1)
    base.update(kw)
    return GameConfig(**base)


def test_price_examples():
    board = PriceBoard(10e9)
    assert price(board) == (0.0, 1.0)
    board.report("a", 6e9)
    board.report("b", 6e9)
    assert price(board) == pytest.approx((1.2, 1.2))
    board.report("a", 0.0)
    board.report("b", 5e9)
    assert price(board) == (0.5, 1.0)


def test_board_rejects_negative():
    with pytest.raises(ValueError):
        PriceBoard(1.0).report("a", -1.0)
    with pytest.raises(ValueError):
        PriceBoard(0.0)


def test_allocate_examples():
    assert allocate(10e9, 2.0) == 5e9
    assert allocate(4e9, 0.8) == 4e9
    assert allocate(0.0, 3.0) == 0.0


def test_allocation_conservation():
    rng = random.Random(4)
    for _ in range(200):
        S = 10 ** rng.uniform(9, 13)
        budgets = [rng.uniform(0, S) * rng.choice([0.01, 0.1, 1]) for _ in range(rng.randint(1, 30))]
        board = PriceBoard(S)
        for k, a in enumerate(budgets):
            board.report(k, a)
        total = math.fsum(allocate(a, board.A) for a in budgets)
        if math.fsum(budgets) <= S:
            assert math.isclose(total, math.fsum(budgets), rel_tol=1e-12)
        else:
            assert math.isclose(total, S, rel_tol=1e-12)


def test_gradient_examples():
    assert gradient(2.0, 1.0, 4.0, 1.0) == 0.0
    assert gradient(1.0, 1.0, 4.0, 1.0) == -3.0
    assert gradient(3.0, 1.0, 0.0, 0.7) == 0.7
    with pytest.raises(ValueError):
        gradient(0.0, 1.0, 4.0, 1.0)


def test_gradient_matches_exact_derivative():
    # d/da [c alpha max(A,1) / a + gamma a]
    rng = random.Random(1)
    for _ in range(100):
        a, A, c, gam, al = (rng.uniform(0.1, 10) for _ in range(5))
        exact = gam - c * al * max(A, 1.0) / a ** 2
        assert math.isclose(gradient(a, A, c, gam, al), exact, rel_tol=1e-12, abs_tol=1e-12)


def test_momentum_examples():
    c = cfg(momentum_decay=0.9, learning_rate=0.1)
    a, nu = momentum_step(5.0, 0.0, 1.0, c, 100.0)
    assert nu == pytest.approx(0.1)
    assert a - 5.0 == pytest.approx(-0.01)
    plain = cfg(momentum_decay=0.0, learning_rate=0.5)
    assert momentum_step(5.0, 3.0, 2.0, plain, 100.0) == (4.0, 2.0)
    assert momentum_step(0.1, 0.0, 10.0, plain, 100.0)[0] == 0.0
    assert momentum_step(99.0, 0.0, -10.0, plain, 100.0)[0] == 100.0
    with pytest.raises(ValueError):
        momentum_step(1.0, 0.0, float("nan"), plain, 100.0)


def test_closed_form_examples():
    assert closed_form_best_response(4.0, 1.0, 1.0) == 2.0
    assert closed_form_best_response(0.0, 1.0, 1.0) == 0.0
    assert closed_form_best_response(4.0, 4.0, 1.0) == 2 * closed_form_best_response(4.0, 1.0, 1.0)
    assert closed_form_best_response(4.0, 0.3, 1.0) == 2.0
    with pytest.raises(ValueError):
        closed_form_best_response(4.0, 1.0, 0.0)


def test_contraction_examples():
    assert contraction_holds(1.0, 1.0, 1.0)
    assert not contraction_holds(0.2, 1.0, 1.0)
    assert contraction_holds(0.2, 1.0, 10.0)


@pytest.mark.parametrize("kw", [dict(momentum_decay=1.0), dict(momentum_decay=-0.1), dict(learning_rate=0.0),
                                dict(gamma=0.0), dict(sniff_grid=1), dict(sniff_period=0)])
def test_config_validation(kw):
    with pytest.raises(ValueError):
        cfg(**kw)


def test_default_config_satisfies_contraction():
    S, c_max = 1.2e12, 7.63e9
    c = GameConfig.for_server(S, c_max)
    assert contraction_holds(c.gamma, c_max, S)
    assert c.learning_rate == pytest.approx(0.05 * S / c.gamma)
    assert GameConfig.for_server(S, c_max, gamma=1e-12).gamma == 1e-12


def fleet_device(model="VGG11", bw_mbps=7.5, gflops=15.0):
    g = catalog_model(model, 0)
    return DeviceProfile("d", gflops * 1e9, bw_mbps * 125000, g)


SRV = ServerProfile(1.2e12)


def test_sniff_grid_range():
    grid = sniff_grid(1.2e12, cfg(sniff_grid=16))
    assert len(grid) == 16
    assert grid[0] == pytest.approx(1.2e8) and grid[-1] == pytest.approx(1.2e12)


def test_sniff_stays_local_when_overpriced():
    dev = fleet_device()
    assert resource_sniff(dev, SRV, 1e9, cfg(gamma=1e-15)) == 0.0


def test_sniff_finds_budget_when_cheap():
    dev = fleet_device(bw_mbps=50)
    assert resource_sniff(dev, SRV, 1.0, cfg(gamma=1e-20)) > 0


def test_sniff_grid_two_evaluates_two_points():
    dev = fleet_device()
    solve = direct_solver(dev)
    calls = []

    def counting(g):
        calls.append(g)
        return solve(g)

    resource_sniff(dev, SRV, 1.0, cfg(gamma=1e-15, sniff_grid=2), counting)
    assert len(calls) == 3  # pure-local reference plus two candidates


def test_idle_device_waits_for_sniff_period():
    dev = fleet_device()
    c = cfg(gamma=1e-15, sniff_period=5)
    st = GameState(0.0, local_mode_rounds=1)
    st2, p, a = device_iteration(dev, st, 2.0, SRV, c)
    assert a == 0.0 and st2.a == 0.0
    assert p.server_set == frozenset()
    assert st2.local_mode_rounds == 2 and st2.iteration == 1


def test_idle_device_sniffs_at_period():
    dev = fleet_device(bw_mbps=50)
    c = cfg(gamma=1e-20, sniff_period=3)
    st2, p, a = device_iteration(dev, GameState(0.0, local_mode_rounds=2), 1.0, SRV, c)
    assert a > 0 and st2.a == a and st2.local_mode_rounds == 0
    assert p.server_set


def test_failed_sniff_records_price():
    dev = fleet_device()
    st2, _, a = device_iteration(dev, GameState(0.0, local_mode_rounds=2), 1e9, SRV,
                                 cfg(gamma=1e-15, sniff_period=3))
    assert a == 0.0 and st2.sniffed_at == 1e9 and st2.local_mode_rounds == 0


def test_no_server_work_goes_local():
    dev = fleet_device(bw_mbps=1e-6)
    st2, p, a = device_iteration(dev, GameState(1e9), 1.0, SRV, cfg(gamma=1e-15, learning_rate=1e10))
    assert a == 0.0 and st2.a == 0.0 and not p.server_set


def test_stationary_budget_is_kept():
    dev = fleet_device(bw_mbps=50)
    a, A = 3e11, 2.0
    _, p = direct_solver(dev)(allocate(a, A))
    c = server_flops(p, dev.model)
    assert c > 0
    gam = c * max(A, 1.0) / a ** 2
    st2, _, a2 = device_iteration(dev, GameState(a), A, SRV, cfg(gamma=gam, learning_rate=0.05 * 1.2e12 / gam))
    assert a2 == pytest.approx(a, rel=1e-9)


def test_reported_budget_within_bounds():
    rng = random.Random(9)
    dev = fleet_device(model="ViT", bw_mbps=30)
    for _ in range(40):
        st = GameState(rng.uniform(0, 1.2e12), momentum=rng.uniform(-1e-12, 1e-12))
        c = cfg(gamma=10 ** rng.uniform(-18, -13), learning_rate=10 ** rng.uniform(20, 28))
        _, _, a = device_iteration(dev, st, rng.uniform(0, 50), SRV, c)
        assert 0.0 <= a <= 1.2e12


finite = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


@given(a=finite, nu=st.floats(-1e3, 1e3), grad=st.floats(-1e3, 1e3), rho=st.floats(0, 0.99),
       lr=finite, cap=finite)
def test_momentum_step_stays_in_bounds(a, nu, grad, rho, lr, cap):
    a = min(a, cap)
    a_new, nu_new = momentum_step(a, nu, grad, cfg(momentum_decay=rho, learning_rate=lr), cap)
    assert 0.0 <= a_new <= cap
    assert math.isfinite(nu_new)


@given(c=finite, A=st.floats(0, 100), gam=finite, alpha=st.floats(0.1, 10))
def test_closed_form_zeroes_gradient(c, A, gam, alpha):
    a = closed_form_best_response(c, A, gam, alpha)
    scale = gam + c * alpha * max(A, 1.0) / a ** 2
    assert abs(gradient(a, A, c, gam, alpha)) <= 1e-12 * scale
