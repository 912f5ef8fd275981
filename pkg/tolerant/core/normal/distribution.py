"""正規分布の基本演算モジュール.

CDF・分位点・区間内容 Q_θ[A−B, A+B] とその半幅微分、
集合 G_{A,B,δ} への所属判定を提供する。
内部関数は配列に対してベクトル化されている。
"""

import math

import numpy as np
from scipy import special

from tolerant.core.errors import DomainError
from tolerant.core.models import IntervalGeometry, PredictionParam

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x: float) -> float:
    """標準正規分布のCDF Φ(x) を計算する.

    scipy の ndtr は裾で erfc を用いるため相対誤差が抑えられる。

    Args:
        x: 評価点（有限値）

    Returns:
        Φ(x)

    Raises:
        DomainError: x が非有限の場合
    """
    if not math.isfinite(x):
        raise DomainError(f"CDFの引数は有限である必要があります: {x}")
    return float(special.ndtr(x))


def std_normal_quantile(p: float) -> float:
    """標準正規分布の分位点 Φ⁻¹(p) を計算する.

    Args:
        p: 確率（0 < p < 1）

    Returns:
        Φ(z) = p を満たす z

    Raises:
        DomainError: p が (0, 1) の外にある場合
    """
    if not (0.0 < p < 1.0):
        raise DomainError(f"分位点の確率は0と1の間である必要があります: {p}")
    return float(special.ndtri(p))


def normal_pdf(z: np.ndarray) -> np.ndarray:
    return _INV_SQRT_2PI * np.exp(-0.5 * np.square(z))


def content_values(
    nu: np.ndarray, tau: np.ndarray, center: float, half: np.ndarray | float
) -> np.ndarray:
    """区間 [center−half, center+half] の内容をサンプルごとに計算する.

    ε = |center − ν| で評価するため ε の符号反転に対して厳密に不変。
    両端が同じ側の裾にある場合は裾確率の差として計算する。
    """
    e = np.abs(center - np.asarray(nu, dtype=np.float64))
    tau = np.asarray(tau, dtype=np.float64)
    half = np.asarray(half, dtype=np.float64)
    lo = (e - half) / tau
    hi = (e + half) / tau
    # lo ≥ 0: 区間全体が平均の片側
    same_side = special.ndtr(-lo) - special.ndtr(-hi)
    straddle = 1.0 - special.ndtr(lo) - special.ndtr(-hi)
    return np.clip(np.where(lo >= 0, same_side, straddle), 0.0, 1.0)


def content_derivative_values(
    nu: np.ndarray, tau: np.ndarray, center: float, half: np.ndarray | float
) -> np.ndarray:
    """内容の半幅 g に関する微分 [φ((ε+g)/τ) + φ((ε−g)/τ)] / τ."""
    e = np.abs(center - np.asarray(nu, dtype=np.float64))
    tau = np.asarray(tau, dtype=np.float64)
    half = np.asarray(half, dtype=np.float64)
    return (normal_pdf((e + half) / tau) + normal_pdf((e - half) / tau)) / tau


def interval_content(theta: PredictionParam, geom: IntervalGeometry) -> float:
    """Q_θ[L, U] = Φ((U−ν)/τ) − Φ((L−ν)/τ) を計算する.

    Args:
        theta: 予測パラメータ (ν, τ)
        geom: 区間の中心と半幅

    Returns:
        区間内容（0以上1以下）
    """
    return float(
        content_values(
            np.array([theta.nu]), np.array([theta.tau]), geom.center, geom.half_length
        )[0]
    )


def content_half_length_derivative(theta: PredictionParam, A: float, g: float) -> float:
    """区間内容の半幅 g による微分を計算する.

    Args:
        theta: 予測パラメータ (ν, τ)
        A: 区間の中心
        g: 半幅（0以上）

    Returns:
        ∂/∂g Q_θ[A−g, A+g]
    """
    if g < 0:
        raise DomainError(f"半幅は0以上である必要があります: {g}")
    return float(
        content_derivative_values(np.array([theta.nu]), np.array([theta.tau]), A, g)[0]
    )


def tolerance_set_contains(
    theta: PredictionParam, A: float, B: float, delta: float
) -> bool:
    """θ ∈ G_{A,B,δ}、すなわち Q_θ[A−B, A+B] ≥ 1−δ かを判定する."""
    if not (0.0 < delta < 1.0):
        raise DomainError(f"δは0と1の間である必要があります: {delta}")
    return interval_content(theta, IntervalGeometry(A, B)) >= 1.0 - delta
