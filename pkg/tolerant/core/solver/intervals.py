"""事後サンプルからベイズ許容区間を構成するモジュール.

提案法（中心固定・最適中心）、WKM法（W・KM）、片側限界、
α-期待値区間、Bonferroni型の両側区間、漸近半幅を提供する。
"""

import logging
import math

import numpy as np
from scipy import optimize

from tolerant.core.errors import ConfigurationError
from tolerant.core.models import IntervalGeometry, PosteriorDraws, ToleranceInterval
from tolerant.core.normal.distribution import content_values, std_normal_quantile
from tolerant.core.solver.quantile import order_statistic, require_interior_rank
from tolerant.core.solver.roots import solve_half_widths
from tolerant.schemas.tolerance import (
    AsymptoticApprox,
    CenterMode,
    CenterSearchConfig,
    IntervalMethod,
    Side,
    ToleranceSpec,
    WkmVariant,
)

logger = logging.getLogger(__name__)


def empirical_bayes_content(
    draws: PosteriorDraws, geom: IntervalGeometry, delta: float
) -> float:
    """G_{A,B,δ} に入るサンプルの割合を返す.

    Args:
        draws: 事後サンプル
        geom: 区間の中心と半幅
        delta: 内容の不足確率 δ

    Returns:
        (1/J)·#{j : Q_{θ_j}[A−B, A+B] ≥ 1−δ}
    """
    contents = content_values(draws.nu, draws.tau, geom.center, geom.half_length)
    return float(np.mean(contents >= 1.0 - delta))


def half_length_for_center(
    draws: PosteriorDraws, A: float, spec: ToleranceSpec
) -> float:
    """中心 A に対する最小半幅 B（{g_j} の経験 (1−α) 分位点）を返す."""
    return order_statistic(_half_widths(draws, A, spec), 1.0 - spec.alpha)


def _half_widths(draws: PosteriorDraws, A: float, spec: ToleranceSpec) -> np.ndarray:
    return solve_half_widths(
        draws.nu, draws.tau, A, spec.delta, spec.root_tol, spec.max_newton_iters
    )


def half_length_profile(
    draws: PosteriorDraws, spec: ToleranceSpec, centers: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """格子上の各中心について B(A) を評価する."""
    centers = np.asarray(centers, dtype=np.float64).reshape(-1)
    halves = np.array([half_length_for_center(draws, float(a), spec) for a in centers])
    return centers, halves


def _search_center(
    draws: PosteriorDraws,
    spec: ToleranceSpec,
    search: CenterSearchConfig,
    mean_center: float,
    mean_half: float,
) -> tuple[float, float, int]:
    sd = float(np.std(draws.nu, ddof=1)) if draws.J > 1 else 0.0
    if sd == 0.0:
        return mean_center, mean_half, 0

    offsets = search.width_sd * sd * np.linspace(-1.0, 1.0, search.grid_points)
    grid = mean_center + offsets
    _, halves = half_length_profile(draws, spec, grid)
    best = int(np.argmin(halves))
    best_center, best_half = float(grid[best]), float(halves[best])
    evaluations = grid.size

    if search.refine:
        step = float(grid[1] - grid[0])
        result = optimize.minimize_scalar(
            lambda a: half_length_for_center(draws, float(a), spec),
            bounds=(best_center - step, best_center + step),
            method="bounded",
            options={"xatol": search.refine_xatol},
        )
        evaluations += int(result.nfev)
        if result.fun < best_half:
            best_center, best_half = float(result.x), float(result.fun)

    # 事後平均が格子点と同等以上なら事後平均を採用する
    if mean_half <= best_half:
        return mean_center, mean_half, evaluations
    return best_center, best_half, evaluations


def solve_proposed(
    draws: PosteriorDraws,
    spec: ToleranceSpec,
    center_mode: CenterMode = CenterMode.FIXED,
    search: CenterSearchConfig | None = None,
) -> ToleranceInterval:
    """提案法で両側 (δ, α) 許容区間を求める.

    中心固定モードでは A = mean(ν_j)、最適中心モードでは B(A) を
    格子探索と局所探索で最小化する。最適中心の半幅は中心固定の半幅を超えない。

    Args:
        draws: 事後サンプル
        spec: (δ, α) と許容誤差
        center_mode: 中心の決め方
        search: 最適中心探索の設定（Noneなら既定値）

    Returns:
        許容区間

    Raises:
        ConfigurationError: J < 1/α の場合
        SolverError: g_j の求根に失敗した場合
    """
    require_interior_rank(spec.alpha, draws.J)
    search = search or CenterSearchConfig()
    mean_center = draws.mean_nu()
    mean_half = half_length_for_center(draws, mean_center, spec)

    metadata: dict = {
        "posterior_mean": mean_center,
        "fixed_half_length": mean_half,
    }
    if center_mode == CenterMode.FIXED:
        center, half = mean_center, mean_half
        method = IntervalMethod.PROPOSED_FIXED_CENTER
    else:
        center, half, evaluations = _search_center(
            draws, spec, search, mean_center, mean_half
        )
        method = IntervalMethod.PROPOSED_OPTIMAL_CENTER
        metadata["center_evaluations"] = evaluations
        logger.debug(
            "最適中心: A=%.6g (事後平均 %.6g), B=%.6g (中心固定 %.6g)",
            center, mean_center, half, mean_half,
        )

    # θ_j ∈ G_{A,B,δ} ⇔ g_j ≤ B（根の残差で境界の判定がぶれないようにする）
    content = float(np.mean(_half_widths(draws, center, spec) <= half))
    return ToleranceInterval(
        method=method,
        spec=spec,
        J=draws.J,
        empirical_content=content,
        geometry=IntervalGeometry(center, half),
        metadata=metadata,
    )


def _wkm_select(
    scores: np.ndarray, variant: WkmVariant, alpha: float
) -> tuple[float, float, float]:
    """WKMの判定基準を最小化する半幅を候補点から選ぶ.

    Returns:
        (半幅, 達成割合, 基準値)
    """
    n = scores.size
    candidates = np.maximum(np.sort(scores), 0.0)
    if variant == WkmVariant.KM:
        counts = np.searchsorted(candidates, candidates, side="right")
        fractions = counts / n
        criterion = np.abs(fractions - (1.0 - alpha))
    else:
        counts = n - np.searchsorted(candidates, candidates, side="left")
        fractions = counts / n
        criterion = np.abs(fractions - alpha)
    # (基準値, 半幅) の辞書式最小: 同点は短い区間
    best = int(np.lexsort((candidates, criterion))[0])
    return float(candidates[best]), float(fractions[best]), float(criterion[best])


def solve_wkm(
    draws: PosteriorDraws, spec: ToleranceSpec, variant: WkmVariant
) -> ToleranceInterval:
    """WKM法で両側許容区間を求める.

    各サンプルの分位点対 L_j = ν_j + τ_j z_{δ/2}, U_j = ν_j + τ_j z_{1−δ/2} を
    直線 L + U = 2Â 上に射影し、判定基準を最小化する点を選ぶ。

    KM: k_j = max(Â−L_j, U_j−Â) として #{k_j ≤ h}/J を 1−α に近づける。
    W: w_j = min(Â−L_j, U_j−Â) として #{w_j ≥ h}/J を α に近づける。
    """
    if draws.J < 2:
        raise ConfigurationError("WKM法には2個以上の事後サンプルが必要です")
    center = draws.mean_nu()
    z = -std_normal_quantile(spec.delta / 2.0)
    lower = draws.nu - draws.tau * z
    upper = draws.nu + draws.tau * z
    if variant == WkmVariant.KM:
        scores = np.maximum(center - lower, upper - center)
        method = IntervalMethod.WKM_KM
    else:
        scores = np.minimum(center - lower, upper - center)
        method = IntervalMethod.WKM_W

    half, fraction, criterion = _wkm_select(scores, variant, spec.alpha)
    geometry = IntervalGeometry(center, half)
    return ToleranceInterval(
        method=method,
        spec=spec,
        J=draws.J,
        empirical_content=empirical_bayes_content(draws, geometry, spec.delta),
        geometry=geometry,
        metadata={
            "posterior_mean": center,
            "achieved_fraction": fraction,
            "criterion": criterion,
        },
    )


def _one_sided_limit(
    draws: PosteriorDraws, delta: float, alpha: float, side: Side
) -> tuple[float, float]:
    z = -std_normal_quantile(delta)
    if side == Side.UPPER:
        quantiles = draws.nu + draws.tau * z
        limit = order_statistic(quantiles, 1.0 - alpha)
        content = float(np.mean(quantiles <= limit))
    else:
        quantiles = -(draws.nu - draws.tau * z)
        limit = -order_statistic(quantiles, 1.0 - alpha)
        content = float(np.mean(-quantiles >= limit))
    return limit, content


def solve_one_sided(
    draws: PosteriorDraws, spec: ToleranceSpec, side: Side
) -> ToleranceInterval:
    """片側 (δ, α) 許容限界を求める.

    上側限界は {ν_j + τ_j z_{1−δ}} の経験 (1−α) 分位点、
    下側限界は {−(ν_j + τ_j z_δ)} の経験 (1−α) 分位点の符号反転。
    """
    require_interior_rank(spec.alpha, draws.J)
    limit, content = _one_sided_limit(draws, spec.delta, spec.alpha, side)
    method = (
        IntervalMethod.ONE_SIDED_UPPER
        if side == Side.UPPER
        else IntervalMethod.ONE_SIDED_LOWER
    )
    return ToleranceInterval(
        method=method,
        spec=spec,
        J=draws.J,
        empirical_content=content,
        limit=limit,
        metadata={"posterior_mean": draws.mean_nu()},
    )


def solve_bonferroni(draws: PosteriorDraws, spec: ToleranceSpec) -> ToleranceInterval:
    """2つの片側 (δ/2, α/2) 限界の共通部分として両側区間を求める."""
    require_interior_rank(spec.alpha / 2.0, draws.J)
    upper, _ = _one_sided_limit(draws, spec.delta / 2.0, spec.alpha / 2.0, Side.UPPER)
    lower, _ = _one_sided_limit(draws, spec.delta / 2.0, spec.alpha / 2.0, Side.LOWER)
    geometry = IntervalGeometry(0.5 * (lower + upper), 0.5 * (upper - lower))
    return ToleranceInterval(
        method=IntervalMethod.BONFERRONI,
        spec=spec,
        J=draws.J,
        empirical_content=empirical_bayes_content(draws, geometry, spec.delta),
        geometry=geometry,
        metadata={"posterior_mean": draws.mean_nu()},
    )


def solve_expectation(
    draws: PosteriorDraws, alpha: float, xtol: float = 1e-12
) -> ToleranceInterval:
    """α-期待値許容区間を求める.

    中心を事後平均に固定し、平均内容 (1/J)Σ Q_{θ_j}[A−B, A+B] = 1−α を
    満たす B を Brent法で解く。平均内容は B について単調非減少。
    """
    if not (0.0 < alpha < 1.0):
        raise ConfigurationError(f"αは0と1の間である必要があります: {alpha}")
    center = draws.mean_nu()
    target = 1.0 - alpha

    def excess(half: float) -> float:
        contents = content_values(draws.nu, draws.tau, center, half)
        return float(np.mean(contents)) - target

    hi = float(np.max(np.abs(center - draws.nu) + draws.tau))
    while excess(hi) <= 0:
        hi *= 2.0
    half = float(optimize.brentq(excess, 0.0, hi, xtol=xtol))
    geometry = IntervalGeometry(center, half)
    return ToleranceInterval(
        method=IntervalMethod.EXPECTATION,
        spec=None,
        J=draws.J,
        empirical_content=excess(half) + target,
        geometry=geometry,
        metadata={"alpha": alpha, "posterior_mean": center},
    )


def asymptotic_half_length(approx: AsymptoticApprox, spec: ToleranceSpec) -> float:
    """漸近半幅 τ̂ ξ_{δ/2} + ξ_α ξ_{δ/2} √Σ₂₂ / √n を返す（ξ_p は上側 p 分位点）."""
    xi_half_delta = -std_normal_quantile(spec.delta / 2.0)
    xi_alpha = -std_normal_quantile(spec.alpha)
    correction = xi_alpha * xi_half_delta * math.sqrt(approx.sigma22)
    return approx.tau_hat * xi_half_delta + correction / math.sqrt(approx.n)


def compare_methods(
    draws: PosteriorDraws,
    spec: ToleranceSpec,
    search: CenterSearchConfig | None = None,
) -> list[ToleranceInterval]:
    """全ての両側構成法を同じサンプルに適用する."""
    return [
        solve_proposed(draws, spec, CenterMode.FIXED),
        solve_proposed(draws, spec, CenterMode.OPTIMAL, search),
        solve_wkm(draws, spec, WkmVariant.W),
        solve_wkm(draws, spec, WkmVariant.KM),
        solve_bonferroni(draws, spec),
        solve_expectation(draws, spec.alpha),
    ]
