"""線形混合モデル X = Uβ + Vγ + e における β の条件付き事後分布と予測パラメータ."""

import logging

import numpy as np
from scipy import linalg

from tolerant.core.errors import ConfigurationError, DomainError, LinearAlgebraError
from tolerant.core.models import LmmDesign, OneWayDataset, PredictionParam

logger = logging.getLogger(__name__)

_JITTER_SCALE = 1e-10
_MIN_PIVOT_RATIO = 1e-12


def cholesky_with_jitter(matrix: np.ndarray, name: str) -> tuple[np.ndarray, bool]:
    """対称正定値行列をCholesky分解する.

    失敗した場合はトレースに比例した微小なリッジを1度だけ加えて再試行する。

    Raises:
        LinearAlgebraError: リッジを加えても分解できない場合
    """
    try:
        return linalg.cho_factor(matrix, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError):
        n = matrix.shape[0]
        ridge = _JITTER_SCALE * max(float(np.trace(matrix)) / n, 1.0)
        logger.warning("%s の分解に失敗したためリッジ %.3e を加えます", name, ridge)
    try:
        return linalg.cho_factor(matrix + ridge * np.eye(n), lower=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise LinearAlgebraError(f"正定値でないため分解できません: {e}", name) from e


def cholesky_identifiable(matrix: np.ndarray, name: str) -> tuple[np.ndarray, bool]:
    """リッジを加えずにCholesky分解し、ピボットの比で条件数を検査する.

    Raises:
        LinearAlgebraError: 分解できない、または min(diag L)² / max(diag L)² が
            閾値未満で係数が識別できない場合
    """
    try:
        factor = linalg.cho_factor(matrix, lower=True, check_finite=True)
    except (linalg.LinAlgError, ValueError) as e:
        raise LinearAlgebraError(f"正定値でないため分解できません: {e}", name) from e
    pivots = np.diag(factor[0]) ** 2
    ratio = float(pivots.min() / pivots.max())
    if not ratio >= _MIN_PIVOT_RATIO:
        raise LinearAlgebraError(
            f"ほぼ特異なため係数を識別できません（ピボット比 {ratio:.1e}）", name
        )
    return factor


def lmm_beta_conditional(
    design: LmmDesign, x: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """β | D, σ², X の正規条件付き事後分布の平均と共分散を返す.

    共分散は (UᵀC⁻¹U + Λ⁻¹)⁻¹、平均はそれに UᵀC⁻¹X を掛けたもの。
    Λ → ∞ の場合は Λ⁻¹ の項を落とす（一般化最小二乗解）。

    Args:
        design: 計画行列と分散構造
        x: 観測ベクトル

    Returns:
        (平均ベクトル, 共分散行列)

    Raises:
        LinearAlgebraError: C または UᵀC⁻¹U + Λ⁻¹ が特異かほぼ特異な場合
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size != design.U.shape[0]:
        raise ConfigurationError(f"観測ベクトルの長さが不正です: {x.size}")

    c_factor = cholesky_with_jitter(design.covariance(), "C")
    c_inv_u = linalg.cho_solve(c_factor, design.U)
    c_inv_x = linalg.cho_solve(c_factor, x)

    precision = design.U.T @ c_inv_u
    if design.lambda_matrix is not None:
        lam_factor = cholesky_with_jitter(design.lambda_matrix, "Lambda")
        precision = precision + linalg.cho_solve(
            lam_factor, np.eye(design.lambda_matrix.shape[0])
        )
    precision = 0.5 * (precision + precision.T)
    name = "U^T C^-1 U" if design.improper else "U^T C^-1 U + Lambda^-1"
    p_factor = cholesky_identifiable(precision, name)

    covariance = linalg.cho_solve(p_factor, np.eye(precision.shape[0]))
    covariance = 0.5 * (covariance + covariance.T)
    mean = linalg.cho_solve(p_factor, design.U.T @ c_inv_x)
    return mean, covariance


def lmm_beta_mean_marginal_form(design: LmmDesign, x: np.ndarray) -> np.ndarray:
    """正則な Λ に対する別表現 ΛUᵀ(UΛUᵀ + C)⁻¹X で条件付き平均を計算する."""
    if design.lambda_matrix is None:
        raise ConfigurationError("別表現の平均は正則な Λ でのみ定義されます")
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    lam = design.lambda_matrix
    marginal = design.U @ lam @ design.U.T + design.covariance()
    factor = cholesky_with_jitter(0.5 * (marginal + marginal.T), "U Lambda U^T + C")
    return lam @ design.U.T @ linalg.cho_solve(factor, x)


def prediction_params(
    beta: np.ndarray,
    D: np.ndarray,
    sigma2: float,
    u_vec: np.ndarray,
    v_vec: np.ndarray,
) -> PredictionParam:
    """将来観測の予測パラメータ ν = uᵀβ, τ² = vᵀDv + σ² を返す.

    Raises:
        DomainError: τ² ≤ 0 の場合
    """
    beta = np.asarray(beta, dtype=np.float64).reshape(-1)
    u_vec = np.asarray(u_vec, dtype=np.float64).reshape(-1)
    v_vec = np.asarray(v_vec, dtype=np.float64).reshape(-1)
    D = np.atleast_2d(np.asarray(D, dtype=np.float64))
    if beta.size != u_vec.size or D.shape != (v_vec.size, v_vec.size):
        raise ConfigurationError("β, u, D, v の次元が一致しません")
    tau2 = float(v_vec @ D @ v_vec) + sigma2
    if not tau2 > 0:
        raise DomainError(f"τ²は正である必要があります: {tau2}")
    return PredictionParam(nu=float(u_vec @ beta), tau=float(np.sqrt(tau2)))


def oneway_design(dataset: OneWayDataset) -> tuple[np.ndarray, np.ndarray]:
    """一元配置モデルの計画行列 U（全て1の列）と V（群の指示行列）を返す."""
    index = dataset.group_index
    U = np.ones((index.size, 1))
    V = np.zeros((index.size, dataset.m))
    V[np.arange(index.size), index] = 1.0
    return U, V
