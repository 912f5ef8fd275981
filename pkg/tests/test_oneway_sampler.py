"""一元配置変量効果モデルのGibbsサンプラーのテスト."""

import numpy as np
import pytest

from tolerant.core.errors import DiagnosticsError
from tolerant.core.models import OneWayDataset
from tolerant.core.sampling.diagnostics import mc_standard_error
from tolerant.core.sampling.oneway import (
    GroupSummary,
    OneWayGibbs,
    OneWayState,
    gibbs_oneway,
)
from tolerant.schemas.sampling import ChainConfig, LmmPriorConfig, LmmSetup

SMALL = OneWayDataset(
    groups=(
        ("a", np.array([1.0, 2.0, 4.0])),
        ("b", np.array([3.0, 5.0])),
        ("c", np.array([0.5, 1.5, 2.5, 6.0])),
    )
)
VANILLA = LmmPriorConfig(
    d2_shape=0.5, d2_rate=0.7, sigma2_shape=1.5, sigma2_rate=0.3, nu_prior_variance=50.0
)
PX = LmmPriorConfig(
    setup=LmmSetup.PARAMETER_EXPANSION,
    sigma2_shape=1.5, sigma2_rate=0.3,
    omega2_shape=0.8, omega2_rate=0.4,
    sigma02_shape=2.0, sigma02_rate=3.0,
    xi_prior_variance=2.5,
)


def _log_ig(x: float, shape: float, rate: float) -> float:
    return -(shape + 1.0) * np.log(x) - rate / x


def _log_normal(x, var) -> float:
    return float(np.sum(-0.5 * np.square(x) / var - 0.5 * np.log(var)))


def _log_likelihood(dataset: OneWayDataset, nu, gamma, sigma2) -> float:
    resid = dataset.values - nu - gamma[dataset.group_index]
    return _log_normal(resid, sigma2)


def vanilla_log_joint(dataset, prior: LmmPriorConfig, s: OneWayState) -> float:
    return (
        _log_likelihood(dataset, s.nu, s.gamma, s.sigma2)
        + _log_normal(s.gamma, s.d2)
        + _log_normal(s.nu, prior.nu_prior_variance)
        + _log_ig(s.d2, prior.d2_shape, prior.d2_rate)
        + _log_ig(s.sigma2, prior.sigma2_shape, prior.sigma2_rate)
    )


def px_log_joint(dataset, prior: LmmPriorConfig, s: OneWayState) -> float:
    return (
        _log_likelihood(dataset, s.nu, s.xi * s.eta, s.sigma2)
        + _log_normal(s.eta, s.omega2)
        + _log_normal(s.xi, prior.xi_prior_variance)
        + _log_normal(s.nu, s.sigma02)
        + _log_ig(s.omega2, prior.omega2_shape, prior.omega2_rate)
        + _log_ig(s.sigma02, prior.sigma02_shape, prior.sigma02_rate)
        + _log_ig(s.sigma2, prior.sigma2_shape, prior.sigma2_rate)
    )


def _vanilla_state() -> OneWayState:
    return OneWayState(nu=1.2, gamma=np.array([0.3, -0.2, 0.5]), d2=0.8, sigma2=1.7)


def _px_state() -> OneWayState:
    eta = np.array([0.4, -0.1, 0.9])
    xi = -0.7
    return OneWayState(
        nu=1.2, gamma=xi * eta, d2=xi**2 * 0.6, sigma2=1.7,
        eta=eta, xi=xi, omega2=0.6, sigma02=2.2,
    )


def _with(state: OneWayState, **changes) -> OneWayState:
    copy = OneWayState(**{**state.__dict__})
    for name, value in changes.items():
        setattr(copy, name, value)
    if "eta" in changes or "xi" in changes:
        copy.gamma = copy.xi * copy.eta
    return copy


def _normal_diff(x1, x2, mean, var) -> float:
    return -((x1 - mean) ** 2 - (x2 - mean) ** 2) / (2.0 * var)


def _ig_diff(x1, x2, shape, rate) -> float:
    return _log_ig(x1, shape, rate) - _log_ig(x2, shape, rate)


def test_vanilla_conditionals_match_log_joint():
    """各完全条件付き分布の対数密度差が同時分布の差と一致する"""
    sampler = OneWayGibbs(GroupSummary.from_dataset(SMALL), VANILLA)
    state = _vanilla_state()

    def joint(s):
        return vanilla_log_joint(SMALL, VANILLA, s)

    means, variances = sampler.gamma_conditional(state)
    for i in range(3):
        g1, g2 = state.gamma.copy(), state.gamma.copy()
        g1[i], g2[i] = 0.9, -1.4
        actual = joint(_with(state, gamma=g1)) - joint(_with(state, gamma=g2))
        expected = _normal_diff(0.9, -1.4, means[i], variances[i])
        assert actual == pytest.approx(expected, rel=1e-9)

    mean, var = sampler.nu_conditional(state)
    actual = joint(_with(state, nu=2.5)) - joint(_with(state, nu=-0.5))
    assert actual == pytest.approx(_normal_diff(2.5, -0.5, mean, var), rel=1e-9)

    shape, rate = sampler.d2_conditional(state)
    actual = joint(_with(state, d2=0.3)) - joint(_with(state, d2=2.1))
    assert actual == pytest.approx(_ig_diff(0.3, 2.1, shape, rate), rel=1e-9)

    shape, rate = sampler.sigma2_conditional(state)
    actual = joint(_with(state, sigma2=0.9)) - joint(_with(state, sigma2=3.0))
    assert actual == pytest.approx(_ig_diff(0.9, 3.0, shape, rate), rel=1e-9)


def test_px_conditionals_match_log_joint():
    """パラメータ拡大設定の完全条件付き分布"""
    sampler = OneWayGibbs(GroupSummary.from_dataset(SMALL), PX)
    state = _px_state()

    def joint(s):
        return px_log_joint(SMALL, PX, s)

    means, variances = sampler.eta_conditional(state)
    for i in range(3):
        e1, e2 = state.eta.copy(), state.eta.copy()
        e1[i], e2[i] = 1.3, -0.6
        actual = joint(_with(state, eta=e1)) - joint(_with(state, eta=e2))
        expected = _normal_diff(1.3, -0.6, means[i], variances[i])
        assert actual == pytest.approx(expected, rel=1e-9)

    mean, var = sampler.xi_conditional(state)
    actual = joint(_with(state, xi=1.1)) - joint(_with(state, xi=-0.2))
    assert actual == pytest.approx(_normal_diff(1.1, -0.2, mean, var), rel=1e-9)

    mean, var = sampler.nu_conditional(state)
    actual = joint(_with(state, nu=2.5)) - joint(_with(state, nu=-0.5))
    assert actual == pytest.approx(_normal_diff(2.5, -0.5, mean, var), rel=1e-9)

    shape, rate = sampler.omega2_conditional(state)
    actual = joint(_with(state, omega2=0.2)) - joint(_with(state, omega2=1.9))
    assert actual == pytest.approx(_ig_diff(0.2, 1.9, shape, rate), rel=1e-9)

    shape, rate = sampler.sigma02_conditional(state)
    actual = joint(_with(state, sigma02=0.5)) - joint(_with(state, sigma02=4.0))
    assert actual == pytest.approx(_ig_diff(0.5, 4.0, shape, rate), rel=1e-9)

    shape, rate = sampler.sigma2_conditional(state)
    actual = joint(_with(state, sigma2=0.9)) - joint(_with(state, sigma2=3.0))
    assert actual == pytest.approx(_ig_diff(0.9, 3.0, shape, rate), rel=1e-9)


# 4次モーメントが有限になるよう形状を大きく取った事前分布
VANILLA_TIGHT = LmmPriorConfig(
    d2_shape=6.5, d2_rate=0.7, sigma2_shape=3.5, sigma2_rate=0.3, nu_prior_variance=50.0
)
PX_TIGHT = LmmPriorConfig(
    setup=LmmSetup.PARAMETER_EXPANSION,
    sigma2_shape=3.5, sigma2_rate=0.3,
    omega2_shape=6.5, omega2_rate=0.4,
    sigma02_shape=7.5, sigma02_rate=3.0,
    xi_prior_variance=2.5,
)
N_REPEAT = 100_000


def _assert_moments(draws: np.ndarray, mean: float, var: float) -> None:
    """標本平均と標本分散が4標準誤差以内."""
    n = draws.size
    assert abs(draws.mean() - mean) <= 4.0 * np.sqrt(var / n)
    squared = (draws - draws.mean()) ** 2
    var_se = float(np.std(squared) / np.sqrt(n))
    assert abs(squared.mean() - var) <= 4.0 * var_se


@pytest.mark.parametrize(
    "prior,state_factory,name",
    [
        (VANILLA_TIGHT, _vanilla_state, "gamma"),
        (VANILLA_TIGHT, _vanilla_state, "nu"),
        (VANILLA_TIGHT, _vanilla_state, "d2"),
        (VANILLA_TIGHT, _vanilla_state, "sigma2"),
        (PX_TIGHT, _px_state, "eta"),
        (PX_TIGHT, _px_state, "xi"),
        (PX_TIGHT, _px_state, "nu"),
        (PX_TIGHT, _px_state, "omega2"),
        (PX_TIGHT, _px_state, "sigma02"),
        (PX_TIGHT, _px_state, "sigma2"),
    ],
)
def test_repeated_draws_match_conditional_moments(prior, state_factory, name):
    """固定した状態で10⁵回抽出した値の平均・分散が条件付き分布と一致する"""
    sampler = OneWayGibbs(GroupSummary.from_dataset(SMALL), prior)
    state = state_factory()
    rng = np.random.default_rng(2024)
    draws = np.asarray(sampler.draw(rng, name, state, size=N_REPEAT))
    params = getattr(sampler, f"{name}_conditional")(state)
    if name in ("gamma", "nu", "eta", "xi"):
        means, variances = (np.atleast_1d(p) for p in params)
        columns = draws.reshape(N_REPEAT, -1)
        for i in range(columns.shape[1]):
            _assert_moments(columns[:, i], float(means[i]), float(variances[i]))
    else:
        shape, rate = params
        assert shape > 4.0
        _assert_moments(
            draws,
            rate / (shape - 1.0),
            rate**2 / ((shape - 1.0) ** 2 * (shape - 2.0)),
        )


def test_step_uses_the_conditional_draws():
    """step と draw は同じ乱数列から同じ値を生成する"""
    sampler = OneWayGibbs(GroupSummary.from_dataset(SMALL), VANILLA)
    stepped = sampler.step(np.random.default_rng(9), _vanilla_state())

    rng = np.random.default_rng(9)
    state = _vanilla_state()
    state.gamma = sampler.draw(rng, "gamma", state)
    state.nu = float(sampler.draw(rng, "nu", state))
    state.d2 = float(sampler.draw(rng, "d2", state))
    state.sigma2 = float(sampler.draw(rng, "sigma2", state))
    np.testing.assert_array_equal(stepped.gamma, state.gamma)
    assert (stepped.nu, stepped.d2, stepped.sigma2) == (
        state.nu, state.d2, state.sigma2,
    )


def test_px_step_keeps_gamma_consistent():
    """PX の1反復後も γ = ξη, d² = ξ²ω² が保たれる"""
    sampler = OneWayGibbs(GroupSummary.from_dataset(SMALL), PX)
    state = sampler.initial_state()
    rng = np.random.default_rng(0)
    for _ in range(20):
        state = sampler.step(rng, state)
        np.testing.assert_allclose(state.gamma, state.xi * state.eta)
        assert state.d2 == pytest.approx(state.xi**2 * state.omega2)


def test_constant_groups_are_degenerate():
    """全ての群で観測値が同一なら DiagnosticsError"""
    dataset = OneWayDataset(groups=(("a", np.ones(3)), ("b", np.full(2, 2.0))))
    with pytest.raises(DiagnosticsError):
        gibbs_oneway(dataset, LmmPriorConfig(), ChainConfig(iterations=10, burn_in=1))


def test_chain_is_deterministic():
    """同じシードから同一の事後サンプル"""
    chain = ChainConfig(iterations=300, burn_in=50, thin=2, seed=17)
    first = gibbs_oneway(SMALL, LmmPriorConfig(), chain)
    second = gibbs_oneway(SMALL, LmmPriorConfig(), chain)
    assert first.J == chain.retained == 125
    np.testing.assert_array_equal(first.nu, second.nu)
    np.testing.assert_array_equal(first.tau, second.tau)


@pytest.fixture(scope="module")
def large_dataset() -> OneWayDataset:
    """m=60 の不釣り合いデータ（d² = 1, σ² = 2）"""
    rng = np.random.default_rng(314)
    d2, sigma2 = 1.0, 2.0
    sizes = rng.integers(2, 8, size=60)
    groups = []
    for i, n_i in enumerate(sizes):
        effect = rng.normal(0.0, np.sqrt(d2))
        groups.append((f"g{i}", 3.0 + effect + rng.normal(0.0, np.sqrt(sigma2), n_i)))
    return OneWayDataset(groups=tuple(groups))


def _gls_nu(dataset: OneWayDataset, records: np.ndarray) -> np.ndarray:
    """γ を積分した E[ν | d², σ², ν の事前分散, X] を各行について計算する."""
    d2, sigma2, prior_var = records[:, 1:2], records[:, 2:3], records[:, 3]
    weights = dataset.sizes / (sigma2 + dataset.sizes * d2)
    precision = weights.sum(axis=1) + 1.0 / prior_var
    return (weights * dataset.group_means).sum(axis=1) / precision


@pytest.mark.parametrize("setup", list(LmmSetup))
def test_posterior_mean_matches_conditional_gls(large_dataset, setup):
    """ν の事後平均は分散成分ごとのGLS平均の事後平均とMC誤差の範囲で一致する"""
    prior = LmmPriorConfig(setup=setup)
    sampler = OneWayGibbs(GroupSummary.from_dataset(large_dataset), prior)
    rng = np.random.default_rng(5)
    state = sampler.initial_state()
    for _ in range(1000):
        state = sampler.step(rng, state)
    records = np.empty((5000, 4))
    for t in range(records.shape[0]):
        state = sampler.step(rng, state)
        prior_var = (
            state.sigma02 if setup == LmmSetup.PARAMETER_EXPANSION
            else prior.nu_prior_variance
        )
        records[t] = (state.nu, state.d2, state.sigma2, prior_var)

    diff = records[:, 0] - _gls_nu(large_dataset, records)
    assert abs(diff.mean()) <= 4.0 * mc_standard_error(diff)
    # τ² = d² + σ² = 3 の近く
    tau2 = records[:, 1] + records[:, 2]
    assert np.median(tau2) == pytest.approx(3.0, rel=0.35)
