"""数値計算で扱うドメイン型."""

from __future__ import annotations

import math
from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from tolerant.core.errors import ConfigurationError, DomainError
from tolerant.schemas.tolerance import IntervalMethod, ToleranceSpec


@dataclass(frozen=True)
class PredictionParam:
    """将来観測 Z ~ N(ν, τ²) のパラメータ θ = (ν, τ)."""

    nu: float
    tau: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.nu) and math.isfinite(self.tau)):
            raise DomainError(f"ν, τは有限である必要があります: {self.nu}, {self.tau}")
        if self.tau <= 0:
            raise DomainError(f"τは正である必要があります: {self.tau}")


@dataclass(frozen=True)
class IntervalGeometry:
    """中心 A と半幅 B で表した区間 [A−B, A+B]."""

    center: float
    half_length: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.center) and math.isfinite(self.half_length)):
            raise DomainError("区間の中心と半幅は有限である必要があります")
        if self.half_length < 0:
            raise DomainError(f"半幅は0以上である必要があります: {self.half_length}")

    @property
    def lower(self) -> float:
        return self.center - self.half_length

    @property
    def upper(self) -> float:
        return self.center + self.half_length


@dataclass(frozen=True, eq=False)
class PosteriorDraws:
    """事後サンプル (ν_j, τ_j), j = 1..J.

    MCMC出力のように自己相関があってもよく、順序は保持される。
    配列は読み取り専用として保持する。
    """

    nu: np.ndarray
    tau: np.ndarray

    def __post_init__(self) -> None:
        nu = np.array(self.nu, dtype=np.float64).reshape(-1)
        tau = np.array(self.tau, dtype=np.float64).reshape(-1)
        if nu.shape != tau.shape:
            raise DomainError(f"νとτの長さが一致しません: {nu.size} != {tau.size}")
        if nu.size == 0:
            raise ConfigurationError("事後サンプルが空です")
        bad = ~(np.isfinite(nu) & np.isfinite(tau))
        if bad.any():
            raise DomainError(
                f"非有限の事後サンプルがあります（位置: {int(np.argmax(bad))}）"
            )
        if (tau <= 0).any():
            raise DomainError(
                f"τ ≤ 0 の事後サンプルがあります（位置: {int(np.argmax(tau <= 0))}）"
            )
        nu.setflags(write=False)
        tau.setflags(write=False)
        object.__setattr__(self, "nu", nu)
        object.__setattr__(self, "tau", tau)

    @classmethod
    def from_pairs(cls, pairs: Iterable[tuple[float, float]]) -> PosteriorDraws:
        arr = np.asarray(list(pairs), dtype=np.float64).reshape(-1, 2)
        return cls(nu=arr[:, 0], tau=arr[:, 1])

    @property
    def J(self) -> int:
        return int(self.nu.size)

    def __len__(self) -> int:
        return self.J

    def __getitem__(self, index: int) -> PredictionParam:
        return PredictionParam(float(self.nu[index]), float(self.tau[index]))

    def mean_nu(self) -> float:
        return float(np.mean(self.nu))

    def transformed(self, scale: float, shift: float) -> PosteriorDraws:
        """(ν, τ) → (cν + s, cτ) を適用したサンプルを返す."""
        if scale <= 0:
            raise DomainError("スケールは正である必要があります")
        return PosteriorDraws(nu=scale * self.nu + shift, tau=scale * self.tau)


@dataclass
class ToleranceInterval:
    """許容区間の計算結果.

    両側区間は geometry を持ち、片側限界は limit のみを持つ。
    期待値区間は δ を持たないため spec は None で、α は metadata に入る。
    """

    method: IntervalMethod
    spec: ToleranceSpec | None
    J: int
    empirical_content: float
    geometry: IntervalGeometry | None = None
    limit: float | None = None
    metadata: dict[str, Any] = field(default_factory=dict)

    @property
    def alpha(self) -> float:
        if self.spec is not None:
            return self.spec.alpha
        return float(self.metadata["alpha"])

    @property
    def lower(self) -> float:
        if self.geometry is not None:
            return self.geometry.lower
        if self.method == IntervalMethod.ONE_SIDED_LOWER:
            return float(self.limit)
        return -math.inf

    @property
    def upper(self) -> float:
        if self.geometry is not None:
            return self.geometry.upper
        if self.method == IntervalMethod.ONE_SIDED_UPPER:
            return float(self.limit)
        return math.inf


@dataclass(frozen=True, eq=False)
class OneWayDataset:
    """不釣り合い一元配置変量効果モデルのデータ X_{ik}."""

    groups: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self) -> None:
        groups = tuple(
            (str(gid), np.array(values, dtype=np.float64).reshape(-1))
            for gid, values in self.groups
        )
        if len(groups) < 2:
            raise ConfigurationError(
                f"一元配置モデルには2群以上が必要です（群数: {len(groups)}）"
            )
        for gid, values in groups:
            if values.size == 0:
                raise ConfigurationError(f"群 {gid} に観測値がありません")
            if not np.isfinite(values).all():
                raise DomainError(f"群 {gid} に非有限の観測値があります")
            values.setflags(write=False)
        object.__setattr__(self, "groups", groups)

    @classmethod
    def from_rows(cls, rows: Sequence[tuple[str, float]]) -> OneWayDataset:
        """(group, value) の行から出現順に群をまとめる."""
        grouped: dict[str, list[float]] = {}
        for gid, value in rows:
            grouped.setdefault(gid, []).append(value)
        return cls(groups=tuple((gid, np.asarray(v)) for gid, v in grouped.items()))

    @property
    def m(self) -> int:
        return len(self.groups)

    @property
    def sizes(self) -> np.ndarray:
        return np.array([values.size for _, values in self.groups], dtype=np.int64)

    @property
    def values(self) -> np.ndarray:
        return np.concatenate([values for _, values in self.groups])

    @property
    def group_index(self) -> np.ndarray:
        return np.repeat(np.arange(self.m), self.sizes)

    @property
    def group_means(self) -> np.ndarray:
        return np.array([values.mean() for _, values in self.groups])

    @property
    def within_ss(self) -> np.ndarray:
        return np.array([((v - v.mean()) ** 2).sum() for _, v in self.groups])


@dataclass(frozen=True, eq=False)
class LmmDesign:
    """線形混合モデル X = Uβ + Vγ + e の計画と分散構造.

    lambda_matrix が None のときは Λ → ∞ の非正則極限を表す。
    """

    U: np.ndarray
    V: np.ndarray
    D: np.ndarray
    sigma2: float
    lambda_matrix: np.ndarray | None
    u_vec: np.ndarray
    v_vec: np.ndarray

    def __post_init__(self) -> None:
        U = np.atleast_2d(np.asarray(self.U, dtype=np.float64))
        V = np.atleast_2d(np.asarray(self.V, dtype=np.float64))
        D = np.atleast_2d(np.asarray(self.D, dtype=np.float64))
        u_vec = np.asarray(self.u_vec, dtype=np.float64).reshape(-1)
        v_vec = np.asarray(self.v_vec, dtype=np.float64).reshape(-1)
        n_obs, p = U.shape
        q = V.shape[1]
        if V.shape[0] != n_obs:
            raise ConfigurationError(f"UとVの行数が異なります: {n_obs} != {V.shape[0]}")
        if D.shape != (q, q):
            raise ConfigurationError(f"Dの形状が不正です: {D.shape} != {(q, q)}")
        if u_vec.size != p or v_vec.size != q:
            raise ConfigurationError("u, v の次元が計画行列と合いません")
        if not np.allclose(D, D.T):
            raise ConfigurationError("Dは対称である必要があります")
        if q > 0 and np.linalg.eigvalsh(D).min() < -1e-12 * max(1.0, np.abs(D).max()):
            raise ConfigurationError("Dは半正定値である必要があります")
        if not (math.isfinite(self.sigma2) and self.sigma2 > 0):
            raise DomainError(f"σ²は正である必要があります: {self.sigma2}")
        lam = self.lambda_matrix
        if lam is not None:
            lam = np.atleast_2d(np.asarray(lam, dtype=np.float64))
            if lam.shape != (p, p) or not np.allclose(lam, lam.T):
                raise ConfigurationError("Λは p×p の対称行列である必要があります")
            if np.linalg.eigvalsh(lam).min() <= 0:
                raise ConfigurationError("Λは正定値である必要があります")
        for name, value in (
            ("U", U), ("V", V), ("D", D), ("lambda_matrix", lam),
            ("u_vec", u_vec), ("v_vec", v_vec),
        ):
            object.__setattr__(self, name, value)

    @property
    def improper(self) -> bool:
        return self.lambda_matrix is None

    def covariance(self) -> np.ndarray:
        """C = V D Vᵀ + σ² I."""
        n_obs = self.U.shape[0]
        return self.V @ self.D @ self.V.T + self.sigma2 * np.eye(n_obs)
