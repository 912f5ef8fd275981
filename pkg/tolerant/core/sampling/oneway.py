"""不釣り合い一元配置変量効果モデル X_ik = ν + γ_i + e_ik のGibbsサンプラー.

vanilla設定:
    ν ~ N(0, V₀), d² ~ IG, σ² ~ IG, γ_i | d² ~ N(0, d²)
パラメータ拡大 (PX) 設定:
    γ_i = ξ η_i, η_i ~ N(0, ω²), ξ ~ N(0, s_ξ²), ω² ~ IG,
    ν | σ₀² ~ N(0, σ₀²), σ₀² ~ IG, d = |ξ| ω

各反復で τ = √(d² + σ²) を出力する。
"""

import logging
from dataclasses import dataclass, field

import numpy as np

from tolerant.core.errors import DiagnosticsError
from tolerant.core.models import OneWayDataset, PosteriorDraws
from tolerant.core.sampling.random import chain_generator, draw_inverse_gamma
from tolerant.schemas.sampling import ChainConfig, LmmPriorConfig, LmmSetup

logger = logging.getLogger(__name__)

_NORMAL_CONDITIONALS = frozenset({"gamma", "nu", "eta", "xi"})


@dataclass(frozen=True, eq=False)
class GroupSummary:
    """群ごとの十分統計量."""

    sizes: np.ndarray
    means: np.ndarray
    within_ss: float

    @classmethod
    def from_dataset(cls, dataset: OneWayDataset) -> "GroupSummary":
        return cls(
            sizes=dataset.sizes.astype(np.float64),
            means=dataset.group_means,
            within_ss=float(dataset.within_ss.sum()),
        )

    @property
    def m(self) -> int:
        return int(self.sizes.size)

    @property
    def total(self) -> float:
        return float(self.sizes.sum())

    def residual_ss(self, nu: float, gamma: np.ndarray) -> float:
        """Σ_ik (x_ik − ν − γ_i)² を群平均と群内平方和から計算する."""
        return self.within_ss + float(
            np.sum(self.sizes * (self.means - nu - gamma) ** 2)
        )


@dataclass
class OneWayState:
    """連鎖の現在値. PX設定では gamma = xi * eta を常に保つ."""

    nu: float
    gamma: np.ndarray
    d2: float
    sigma2: float
    eta: np.ndarray = field(default_factory=lambda: np.empty(0))
    xi: float = 1.0
    omega2: float = 1.0
    sigma02: float = 1.0


class OneWayGibbs:
    """一元配置モデルの完全条件付き分布と1反復の更新."""

    def __init__(self, summary: GroupSummary, prior: LmmPriorConfig):
        if summary.within_ss <= 0:
            raise DiagnosticsError(
                "全ての群で観測値が同一のため分散の条件付き分布が退化しています"
            )
        self.summary = summary
        self.prior = prior

    def initial_state(self) -> OneWayState:
        s = self.summary
        nu = float(np.sum(s.sizes * s.means) / s.total)
        gamma = s.means - nu
        dof = s.total - s.m
        sigma2 = s.within_ss / dof if dof > 0 else s.within_ss / s.total
        d2 = max(float(np.var(s.means)), 1e-3 * sigma2)
        state = OneWayState(nu=nu, gamma=gamma.copy(), d2=d2, sigma2=sigma2)
        if self.prior.setup == LmmSetup.PARAMETER_EXPANSION:
            state.eta = gamma.copy()
            state.xi = 1.0
            state.omega2 = d2
            state.sigma02 = max(nu * nu, 1.0)
        return state

    # ---- vanilla ----

    def gamma_conditional(self, state: OneWayState) -> tuple[np.ndarray, np.ndarray]:
        """γ_i | ν, d², σ² の (平均, 分散)."""
        s = self.summary
        precision = s.sizes / state.sigma2 + 1.0 / state.d2
        mean = (s.sizes / state.sigma2) * (s.means - state.nu) / precision
        return mean, 1.0 / precision

    def nu_conditional(self, state: OneWayState) -> tuple[float, float]:
        """ν | γ, σ² (vanilla) または ν | γ, σ², σ₀² (PX) の (平均, 分散)."""
        s = self.summary
        if self.prior.setup == LmmSetup.PARAMETER_EXPANSION:
            prior_variance = state.sigma02
        else:
            prior_variance = self.prior.nu_prior_variance
        precision = s.total / state.sigma2 + 1.0 / prior_variance
        mean = float(np.sum(s.sizes * (s.means - state.gamma))) / state.sigma2
        return mean / precision, 1.0 / precision

    def d2_conditional(self, state: OneWayState) -> tuple[float, float]:
        """d² | γ の逆ガンマ (形状, レート)."""
        return (
            self.prior.d2_shape + self.summary.m / 2.0,
            self.prior.d2_rate + float(np.sum(state.gamma**2)) / 2.0,
        )

    def sigma2_conditional(self, state: OneWayState) -> tuple[float, float]:
        """σ² | ν, γ の逆ガンマ (形状, レート)."""
        return (
            self.prior.sigma2_shape + self.summary.total / 2.0,
            self.prior.sigma2_rate
            + self.summary.residual_ss(state.nu, state.gamma) / 2.0,
        )

    # ---- parameter expansion ----

    def eta_conditional(self, state: OneWayState) -> tuple[np.ndarray, np.ndarray]:
        """η_i | ξ, ω², ν, σ² の (平均, 分散)."""
        s = self.summary
        precision = state.xi**2 * s.sizes / state.sigma2 + 1.0 / state.omega2
        mean = state.xi * s.sizes * (s.means - state.nu) / state.sigma2 / precision
        return mean, 1.0 / precision

    def xi_conditional(self, state: OneWayState) -> tuple[float, float]:
        """ξ | η, ν, σ² の (平均, 分散)."""
        s = self.summary
        precision = (
            float(np.sum(s.sizes * state.eta**2)) / state.sigma2
            + 1.0 / self.prior.xi_prior_variance
        )
        mean = float(np.sum(s.sizes * state.eta * (s.means - state.nu))) / state.sigma2
        return mean / precision, 1.0 / precision

    def omega2_conditional(self, state: OneWayState) -> tuple[float, float]:
        """ω² | η の逆ガンマ (形状, レート)."""
        return (
            self.prior.omega2_shape + self.summary.m / 2.0,
            self.prior.omega2_rate + float(np.sum(state.eta**2)) / 2.0,
        )

    def sigma02_conditional(self, state: OneWayState) -> tuple[float, float]:
        """σ₀² | ν の逆ガンマ (形状, レート)."""
        return (
            self.prior.sigma02_shape + 0.5,
            self.prior.sigma02_rate + state.nu**2 / 2.0,
        )

    def draw(
        self,
        rng: np.random.Generator,
        name: str,
        state: OneWayState,
        size: int | None = None,
    ) -> float | np.ndarray:
        """名前 name の完全条件付き分布から抽出する.

        size を与えると同じ条件のもとで size 個を独立に抽出する
        （γ, η では形状 (size, m)）。
        """
        params = getattr(self, f"{name}_conditional")(state)
        if name in _NORMAL_CONDITIONALS:
            mean, var = params
            shape = None if size is None else (size, *np.shape(mean))
            return rng.normal(mean, np.sqrt(var), size=shape)
        return draw_inverse_gamma(rng, *params, size=size)

    def step(self, rng: np.random.Generator, state: OneWayState) -> OneWayState:
        """全ての条件付き分布を1巡して state を更新する."""
        if self.prior.setup == LmmSetup.PARAMETER_EXPANSION:
            state.eta = np.asarray(self.draw(rng, "eta", state))
            state.xi = float(self.draw(rng, "xi", state))
            state.gamma = state.xi * state.eta
            state.omega2 = float(self.draw(rng, "omega2", state))
            state.d2 = state.xi**2 * state.omega2
            state.nu = float(self.draw(rng, "nu", state))
            state.sigma02 = float(self.draw(rng, "sigma02", state))
        else:
            state.gamma = np.asarray(self.draw(rng, "gamma", state))
            state.nu = float(self.draw(rng, "nu", state))
            state.d2 = float(self.draw(rng, "d2", state))
        state.sigma2 = float(self.draw(rng, "sigma2", state))
        return state


def gibbs_oneway(
    dataset: OneWayDataset,
    prior: LmmPriorConfig,
    chain: ChainConfig,
    rng: np.random.Generator | None = None,
) -> PosteriorDraws:
    """一元配置モデルの事後サンプル (ν_j, τ_j = √(d_j² + σ_j²)) を生成する.

    Args:
        dataset: 群ごとの観測値
        prior: 事前分布の設定
        chain: 反復回数・burn-in・間引き・シード
        rng: 乱数生成器（Noneなら chain.seed から生成）

    Returns:
        保持された事後サンプル

    Raises:
        DiagnosticsError: 群内変動がない、または τ が退化した場合
    """
    sampler = OneWayGibbs(GroupSummary.from_dataset(dataset), prior)
    rng = rng if rng is not None else chain_generator(chain.seed)
    state = sampler.initial_state()
    nu_out = np.empty(chain.retained)
    tau_out = np.empty(chain.retained)

    kept = 0
    for t in range(chain.iterations):
        state = sampler.step(rng, state)
        if chain.keeps(t):
            nu_out[kept] = state.nu
            tau_out[kept] = np.sqrt(state.d2 + state.sigma2)
            kept += 1

    if not (np.isfinite(tau_out).all() and (tau_out > 0).all()):
        raise DiagnosticsError("τ が0または非有限の事後サンプルが生成されました")
    logger.debug(
        "一元配置Gibbs完了: setup=%s, m=%d, 保持サンプル=%d",
        prior.setup.value, dataset.m, kept,
    )
    return PosteriorDraws(nu=nu_out, tau=tau_out)
