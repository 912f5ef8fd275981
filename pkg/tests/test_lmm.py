"""線形混合モデルの β 事後分布と予測パラメータのテスト."""

import numpy as np
import pytest

from tolerant.core.errors import ConfigurationError, DomainError, LinearAlgebraError
from tolerant.core.models import LmmDesign, OneWayDataset
from tolerant.core.sampling.lmm import (
    cholesky_identifiable,
    cholesky_with_jitter,
    lmm_beta_conditional,
    lmm_beta_mean_marginal_form,
    oneway_design,
    prediction_params,
)


def _balanced(m: int, n: int, rng: np.random.Generator) -> OneWayDataset:
    return OneWayDataset(
        groups=tuple((f"g{i}", rng.normal(i, 1.0, size=n)) for i in range(m))
    )


@pytest.mark.parametrize("d2,sigma2", [(0.5, 1.0), (3.0, 0.2), (10.0, 10.0)])
def test_balanced_improper_limit_is_grand_mean(rng, d2, sigma2):
    """釣り合い型・Λ→∞ では平均は全体平均で分散成分によらない"""
    dataset = _balanced(4, 5, rng)
    U, V = oneway_design(dataset)
    design = LmmDesign(
        U=U, V=V, D=d2 * np.eye(4), sigma2=sigma2, lambda_matrix=None,
        u_vec=[1.0], v_vec=np.zeros(4),
    )
    mean, cov = lmm_beta_conditional(design, dataset.values)
    assert design.improper
    assert mean[0] == pytest.approx(dataset.values.mean(), rel=1e-10)
    assert cov[0, 0] == pytest.approx((5 * d2 + sigma2) / 20.0, rel=1e-10)


def test_no_random_effect_is_ols(rng):
    """D = 0 では最小二乗解"""
    U = np.column_stack([np.ones(30), rng.normal(size=30)])
    V = rng.normal(size=(30, 2))
    x = U @ np.array([1.0, -2.0]) + rng.normal(size=30)
    design = LmmDesign(
        U=U, V=V, D=np.zeros((2, 2)), sigma2=0.7, lambda_matrix=None,
        u_vec=[1.0, 0.0], v_vec=[0.0, 0.0],
    )
    mean, cov = lmm_beta_conditional(design, x)
    ols, *_ = np.linalg.lstsq(U, x, rcond=None)
    np.testing.assert_allclose(mean, ols, rtol=1e-9)
    np.testing.assert_allclose(cov, 0.7 * np.linalg.inv(U.T @ U), rtol=1e-9)


def test_proper_prior_forms_agree(rng):
    """正則な Λ で2つの平均の表現と共分散の逆行列が一致する"""
    for _ in range(5):
        U = rng.normal(size=(12, 3))
        V = rng.normal(size=(12, 2))
        A = rng.normal(size=(2, 2))
        L = rng.normal(size=(3, 3))
        design = LmmDesign(
            U=U, V=V, D=A @ A.T, sigma2=0.5, lambda_matrix=L @ L.T + np.eye(3),
            u_vec=np.ones(3), v_vec=np.ones(2),
        )
        x = rng.normal(size=12)
        mean, cov = lmm_beta_conditional(design, x)
        np.testing.assert_allclose(
            mean, lmm_beta_mean_marginal_form(design, x), rtol=1e-8, atol=1e-10
        )
        c_inv = np.linalg.inv(design.covariance())
        precision = U.T @ c_inv @ U + np.linalg.inv(design.lambda_matrix)
        np.testing.assert_allclose(cov, np.linalg.inv(precision), rtol=1e-8, atol=1e-12)
        # 正規方程式
        np.testing.assert_allclose(precision @ mean, U.T @ c_inv @ x, rtol=1e-8)


def test_marginal_form_needs_proper_prior(rng):
    dataset = _balanced(2, 3, rng)
    U, V = oneway_design(dataset)
    design = LmmDesign(
        U=U, V=V, D=np.eye(2), sigma2=1.0, lambda_matrix=None,
        u_vec=[1.0], v_vec=[0.0, 0.0],
    )
    with pytest.raises(ConfigurationError):
        lmm_beta_mean_marginal_form(design, dataset.values)
    with pytest.raises(ConfigurationError):
        lmm_beta_conditional(design, np.zeros(5))


def test_prediction_params_examples():
    """ν = uᵀβ、τ² = vᵀDv + σ²"""
    theta = prediction_params([3.0], [[2.0]], 1.5, [1.0], [1.0])
    assert theta.nu == 3.0
    assert theta.tau == pytest.approx(np.sqrt(3.5))
    theta = prediction_params([3.0, 4.0], np.eye(2), 0.25, [1.0, 2.0], [0.0, 0.0])
    assert theta.nu == 11.0
    assert theta.tau == pytest.approx(0.5)
    with pytest.raises(DomainError):
        prediction_params([1.0], [[0.0]], 0.0, [1.0], [1.0])
    with pytest.raises(ConfigurationError):
        prediction_params([1.0, 2.0], [[1.0]], 1.0, [1.0], [1.0])


def test_cholesky_failure_names_matrix():
    """リッジを加えても正定値にならない行列"""
    with pytest.raises(LinearAlgebraError) as excinfo:
        cholesky_with_jitter(-np.eye(3), "C")
    assert excinfo.value.matrix_name == "C"


def test_cholesky_jitter_rescues_semidefinite():
    """特異な半正定値行列は微小なリッジで分解できる"""
    factor, lower = cholesky_with_jitter(np.array([[1.0, 1.0], [1.0, 1.0]]), "S")
    assert lower
    assert np.all(np.isfinite(factor))


def test_collinear_fixed_effects_are_rejected(rng):
    """Λ→∞ で U の列が共線なら UᵀC⁻¹U の分解で失敗する"""
    col = rng.normal(size=12)
    design = LmmDesign(
        U=np.column_stack([col, 2.0 * col]), V=np.ones((12, 1)), D=[[0.5]],
        sigma2=1.0, lambda_matrix=None, u_vec=[1.0, 0.0], v_vec=[0.0],
    )
    with pytest.raises(LinearAlgebraError) as excinfo:
        lmm_beta_conditional(design, rng.normal(size=12))
    assert excinfo.value.matrix_name == "U^T C^-1 U"


def test_collinear_fixed_effects_identified_by_proper_prior(rng):
    """正則な Λ があれば共線な U でも事後分布が定まる"""
    col = rng.normal(size=12)
    design = LmmDesign(
        U=np.column_stack([col, 2.0 * col]), V=np.ones((12, 1)), D=[[0.5]],
        sigma2=1.0, lambda_matrix=np.eye(2), u_vec=[1.0, 0.0], v_vec=[0.0],
    )
    mean, cov = lmm_beta_conditional(design, rng.normal(size=12))
    assert np.all(np.isfinite(mean))
    assert np.all(np.linalg.eigvalsh(cov) > 0)


def test_near_singular_precision_fails_ratio_check():
    """ピボット比が閾値未満の行列はリッジで救済しない"""
    matrix = np.array([[1.0, 0.0], [0.0, 1e-14]])
    with pytest.raises(LinearAlgebraError) as excinfo:
        cholesky_identifiable(matrix, "P")
    assert excinfo.value.matrix_name == "P"
    factor, _ = cholesky_identifiable(np.array([[1.0, 0.0], [0.0, 1e-6]]), "P")
    assert np.all(np.isfinite(factor))


def test_oneway_design_gls_weights():
    """一元配置の Λ→∞ の平均は重み n_i/(σ² + n_i d²) の群平均の加重平均"""
    dataset = OneWayDataset(
        groups=(
            ("a", np.array([1.0, 2.0, 4.0])),
            ("b", np.array([3.0, 5.0])),
            ("c", np.array([0.5, 1.5, 2.5, 6.0, 7.0])),
        )
    )
    U, V = oneway_design(dataset)
    assert U.shape == (10, 1) and V.shape == (10, 3)
    np.testing.assert_array_equal(V.sum(axis=0), [3, 2, 5])
    d2, sigma2 = 0.8, 1.3
    design = LmmDesign(
        U=U, V=V, D=d2 * np.eye(3), sigma2=sigma2, lambda_matrix=None,
        u_vec=[1.0], v_vec=[0.0, 0.0, 0.0],
    )
    mean, _ = lmm_beta_conditional(design, dataset.values)
    weights = dataset.sizes / (sigma2 + dataset.sizes * d2)
    expected = np.sum(weights * dataset.group_means) / np.sum(weights)
    assert mean[0] == pytest.approx(expected, rel=1e-10)


def test_design_validation():
    """計画行列の次元と分散行列の検証"""
    with pytest.raises(ConfigurationError):
        LmmDesign(
            U=np.ones((3, 1)), V=np.ones((2, 1)), D=[[1.0]], sigma2=1.0,
            lambda_matrix=None, u_vec=[1.0], v_vec=[1.0],
        )
    with pytest.raises(ConfigurationError):
        LmmDesign(
            U=np.ones((3, 1)), V=np.ones((3, 1)), D=[[-1.0]], sigma2=1.0,
            lambda_matrix=None, u_vec=[1.0], v_vec=[1.0],
        )
    with pytest.raises(DomainError):
        LmmDesign(
            U=np.ones((3, 1)), V=np.ones((3, 1)), D=[[1.0]], sigma2=0.0,
            lambda_matrix=None, u_vec=[1.0], v_vec=[1.0],
        )
