"""i.i.d.正規モデル X_k ~ N(ν, τ²) の事後サンプラー.

Gibbsサンプラー（比例・独立の両事前分布）と、比例事前分布に対する
正規-逆ガンマ事後分布からの直接抽出を提供する。
"""

import logging
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from tolerant.core.errors import ConfigurationError, DomainError, UnsupportedModeError
from tolerant.core.models import PosteriorDraws
from tolerant.core.sampling.random import chain_generator, draw_inverse_gamma
from tolerant.schemas.sampling import ChainConfig, IidPriorConfig, VarianceMode

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SampleSummary:
    """十分統計量 (n, x̄, s²)."""

    n: int
    mean: float
    s2: float


def summarize_sample(data: Sequence[float] | np.ndarray) -> SampleSummary:
    """観測値から十分統計量を計算する.

    Raises:
        ConfigurationError: n < 2 の場合
        DomainError: 非有限値を含む場合
    """
    x = np.asarray(data, dtype=np.float64).reshape(-1)
    if x.size < 2:
        raise ConfigurationError(f"観測値は2個以上必要です（n={x.size}）")
    if not np.isfinite(x).all():
        raise DomainError("観測値に非有限値が含まれています")
    return SampleSummary(n=int(x.size), mean=float(x.mean()), s2=float(x.var(ddof=1)))


def nu_conditional(
    stats: SampleSummary, prior: IidPriorConfig, tau2: float
) -> tuple[float, float]:
    """ν | τ², X の正規条件付き分布の (平均, 分散)."""
    n, b = stats.n, prior.b
    if prior.variance_mode == VarianceMode.PROPORTIONAL:
        return (b * prior.a + n * stats.mean) / (b + n), tau2 / (b + n)
    scale = b * tau2 + n
    return (b * prior.a * tau2 + n * stats.mean) / scale, tau2 / scale


def tau2_conditional(
    stats: SampleSummary, prior: IidPriorConfig, nu: float
) -> tuple[float, float]:
    """τ² | ν, X の逆ガンマ条件付き分布の (形状, レート)."""
    n = stats.n
    ss = (n - 1) * stats.s2 + n * (stats.mean - nu) ** 2
    if prior.variance_mode == VarianceMode.PROPORTIONAL:
        ss += prior.b * (nu - prior.a) ** 2
        return prior.alpha0 + (n + 1) / 2.0, prior.beta0 + ss / 2.0
    return prior.alpha0 + n / 2.0, prior.beta0 + ss / 2.0


def draw_nu(
    rng: np.random.Generator,
    stats: SampleSummary,
    prior: IidPriorConfig,
    tau2: float,
    size: int | None = None,
) -> float | np.ndarray:
    mean, var = nu_conditional(stats, prior, tau2)
    return rng.normal(mean, np.sqrt(var), size=size)


def draw_tau2(
    rng: np.random.Generator,
    stats: SampleSummary,
    prior: IidPriorConfig,
    nu: float,
    size: int | None = None,
) -> float | np.ndarray:
    shape, rate = tau2_conditional(stats, prior, nu)
    return draw_inverse_gamma(rng, shape, rate, size=size)


def gibbs_iid_normal(
    data: Sequence[float] | np.ndarray,
    prior: IidPriorConfig,
    chain: ChainConfig,
    rng: np.random.Generator | None = None,
) -> PosteriorDraws:
    """i.i.d.正規モデルの事後分布をGibbsサンプラーで近似する.

    Args:
        data: 観測値（2個以上）
        prior: 事前分布
        chain: 反復回数・burn-in・間引き・シード
        rng: 乱数生成器（Noneなら chain.seed から生成）

    Returns:
        保持された (ν, τ) の事後サンプル
    """
    stats = summarize_sample(data)
    rng = rng if rng is not None else chain_generator(chain.seed)
    nu_out = np.empty(chain.retained)
    tau_out = np.empty(chain.retained)

    tau2 = stats.s2 if stats.s2 > 0 else prior.beta0 / prior.alpha0
    kept = 0
    for t in range(chain.iterations):
        nu = float(draw_nu(rng, stats, prior, tau2))
        tau2 = float(draw_tau2(rng, stats, prior, nu))
        if chain.keeps(t):
            nu_out[kept] = nu
            tau_out[kept] = np.sqrt(tau2)
            kept += 1

    logger.info(
        "i.i.d. Gibbs完了: mode=%s, n=%d, 保持サンプル=%d",
        prior.variance_mode.value, stats.n, kept,
    )
    return PosteriorDraws(nu=nu_out, tau=tau_out)


def conjugate_tau2_posterior(
    stats: SampleSummary, prior: IidPriorConfig
) -> tuple[float, float]:
    """比例事前分布での τ² の周辺事後分布 IG の (形状, レート)."""
    n, a, b = stats.n, prior.a, prior.b
    shape = prior.alpha0 + n / 2.0
    rate = (
        prior.beta0
        + (n - 1) * stats.s2 / 2.0
        + n * b * (stats.mean - a) ** 2 / (2.0 * (b + n))
    )
    return shape, rate


def exact_conjugate_iid(
    data: Sequence[float] | np.ndarray,
    prior: IidPriorConfig,
    n_draws: int = 10_000,
    seed: int = 0,
    rng: np.random.Generator | None = None,
) -> PosteriorDraws:
    """正規-逆ガンマ事後分布から独立なサンプルを直接抽出する.

    τ² を周辺事後分布から、続いて ν | τ を正規条件付き分布から抽出する。

    Raises:
        UnsupportedModeError: 独立事前分布が指定された場合（閉形式がない）
    """
    if prior.variance_mode != VarianceMode.PROPORTIONAL:
        raise UnsupportedModeError("厳密な共役抽出は比例事前分布でのみ利用できます")
    if n_draws < 1:
        raise ConfigurationError("抽出数は1以上である必要があります")
    stats = summarize_sample(data)
    rng = rng if rng is not None else chain_generator(seed)
    shape, rate = conjugate_tau2_posterior(stats, prior)
    tau2 = draw_inverse_gamma(rng, shape, rate, size=n_draws)
    mean, _ = nu_conditional(stats, prior, 1.0)
    nu = rng.normal(mean, np.sqrt(tau2 / (prior.b + stats.n)))
    return PosteriorDraws(nu=nu, tau=np.sqrt(tau2))
