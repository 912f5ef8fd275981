"""半幅 g_j の求根モジュール.

各サンプル θ_j について Q_{θ_j}[A−g, A+g] = 1−δ を満たす g を
Newton法で解く。反復が括弧 [lo, hi] の外に出た場合は二分法に切り替える。
全サンプルを配列として同時に反復する。
"""

import logging

import numpy as np

from tolerant.core.errors import SolverError
from tolerant.core.models import PredictionParam
from tolerant.core.normal.distribution import (
    content_derivative_values,
    content_values,
)
from tolerant.schemas.tolerance import ToleranceSpec

logger = logging.getLogger(__name__)

# 括弧の倍々拡大の上限回数
_MAX_DOUBLINGS = 1100
# 収束とみなす相対ステップ幅
_STEP_RTOL = 1e-13


def initial_half_width(nu: np.ndarray, tau: np.ndarray, center: float) -> np.ndarray:
    """初期値 g₀: |A−ν| < τ なら |A−ν|+τ、そうでなければ |A−ν|."""
    e = np.abs(center - nu)
    return np.where(e < tau, e + tau, e)


def _upper_bracket(
    nu: np.ndarray, tau: np.ndarray, center: float, target: float
) -> np.ndarray:
    hi = np.abs(center - nu) + tau
    need = content_values(nu, tau, center, hi) <= target
    doublings = 0
    while need.any():
        if doublings >= _MAX_DOUBLINGS:
            raise SolverError(
                "括弧の上端が見つかりません", draw_index=int(np.argmax(need))
            )
        hi[need] *= 2.0
        need[need] = content_values(nu[need], tau[need], center, hi[need]) <= target
        doublings += 1
    return hi


def solve_half_widths(
    nu: np.ndarray,
    tau: np.ndarray,
    center: float,
    delta: float,
    root_tol: float = 1e-4,
    max_iter: int = 100,
) -> np.ndarray:
    """全サンプルの g_j を同時に解く.

    Args:
        nu: ν_j の配列
        tau: τ_j の配列（正）
        center: 区間の中心 A
        delta: 内容の不足確率 δ
        root_tol: 内容の残差の許容値
        max_iter: Newton反復の最大回数

    Returns:
        g_j の配列（0以上）

    Raises:
        SolverError: 最大反復後も残差が root_tol を超えるサンプルがある場合
    """
    nu = np.asarray(nu, dtype=np.float64)
    tau = np.asarray(tau, dtype=np.float64)
    target = 1.0 - delta

    lo = np.zeros_like(nu)
    hi = _upper_bracket(nu, tau, center, target)
    g = np.minimum(initial_half_width(nu, tau, center), hi)
    active = np.ones(nu.shape, dtype=bool)
    bisections = 0

    for _ in range(max_iter):
        if not active.any():
            break
        idx = np.flatnonzero(active)
        ga = g[idx]
        f = content_values(nu[idx], tau[idx], center, ga) - target
        below = f < 0
        lo[idx] = np.where(below, ga, lo[idx])
        hi[idx] = np.where(below, hi[idx], ga)

        d = content_derivative_values(nu[idx], tau[idx], center, ga)
        with np.errstate(divide="ignore", invalid="ignore"):
            g_new = ga - f / d
        outside = ~np.isfinite(g_new) | (g_new <= lo[idx]) | (g_new >= hi[idx])
        g_new = np.where(outside, 0.5 * (lo[idx] + hi[idx]), g_new)
        bisections += int(outside.sum())

        step_small = np.abs(g_new - ga) <= _STEP_RTOL * (ga + tau[idx])
        done = (f == 0) | (step_small & (np.abs(f) <= root_tol))
        g[idx] = np.where(f == 0, ga, g_new)
        active[idx[done]] = False

    if bisections:
        logger.debug("二分法への切り替え: %d 回", bisections)

    residual = np.abs(content_values(nu, tau, center, g) - target)
    failed = residual > root_tol
    if failed.any():
        index = int(np.argmax(failed))
        raise SolverError(
            f"g_jの求根が収束しませんでした（残差: {residual[index]:.3e}）",
            draw_index=index,
        )
    if active.any():
        logger.debug("ステップ幅が収束前に打ち切ったサンプル: %d", int(active.sum()))
    return g


def solve_g(
    draw: PredictionParam, A: float, delta: float, spec: ToleranceSpec
) -> float:
    """1つのサンプルについて Q_θ[A−g, A+g] = 1−δ を満たす g を解く."""
    return float(
        solve_half_widths(
            np.array([draw.nu]),
            np.array([draw.tau]),
            A,
            delta,
            spec.root_tol,
            spec.max_newton_iters,
        )[0]
    )
