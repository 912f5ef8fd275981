"""許容区間の計算条件とレポートのPydanticスキーマ定義."""

from __future__ import annotations

import math
from enum import Enum
from typing import TYPE_CHECKING, Any

from pydantic import BaseModel, ConfigDict, Field, field_validator

if TYPE_CHECKING:
    from tolerant.core.models import ToleranceInterval


class IntervalMethod(str, Enum):
    """区間の構成法."""

    PROPOSED_FIXED_CENTER = "proposed_fixed_center"
    PROPOSED_OPTIMAL_CENTER = "proposed_optimal_center"
    WKM_W = "wkm_w"
    WKM_KM = "wkm_km"
    ONE_SIDED_UPPER = "one_sided_upper"
    ONE_SIDED_LOWER = "one_sided_lower"
    EXPECTATION = "expectation"
    BONFERRONI = "bonferroni"


class CenterMode(str, Enum):
    """提案法における中心の決め方."""

    FIXED = "fixed_at_posterior_mean"
    OPTIMAL = "optimal"


class WkmVariant(str, Enum):
    """WKM法の判定基準."""

    W = "W"
    KM = "KM"


class Side(str, Enum):
    """片側限界の向き."""

    UPPER = "upper"
    LOWER = "lower"


class ToleranceSpec(BaseModel):
    """(δ, α) とソルバーの許容誤差."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    delta: float = Field(0.1, gt=0.0, lt=1.0, description="内容の不足確率 δ")
    alpha: float = Field(0.05, gt=0.0, lt=1.0, description="事後確率の不足 α")
    root_tol: float = Field(
        1e-4, gt=0.0, description="g_j の方程式に対する残差の許容値"
    )
    max_newton_iters: int = Field(100, ge=1, description="Newton法の最大反復回数")


class CenterSearchConfig(BaseModel):
    """最適中心探索の設定.

    事後平均 Â₀ を中心に ±width_sd·SD(ν_j) の格子を粗く調べ、
    最良点の近傍を有界Brent法（黄金分割）で細かく探索する。
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    grid_points: int = Field(41, ge=3, description="粗い格子の点数")
    width_sd: float = Field(2.0, gt=0.0, description="格子の半幅（νのSD単位）")
    refine: bool = Field(True, description="格子探索後に局所探索を行うか")
    refine_xatol: float = Field(1e-6, gt=0.0, description="局所探索の許容誤差")


class AsymptoticApprox(BaseModel):
    """漸近半幅の計算に必要な量."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    tau_hat: float = Field(..., gt=0.0, description="τ の推定値")
    sigma22: float = Field(..., gt=0.0, description="√n(τ̂−τ) の漸近分散")
    n: int = Field(..., ge=1, description="標本サイズ")


def _finite_or_none(value: float) -> float | None:
    return value if math.isfinite(value) else None


class IntervalReport(BaseModel):
    """区間計算結果のフラットなレポート.

    Note:
        L と U は A と B から計算された値をそのまま保持する。
        片側区間では A, B は None となり、非有界側は None（JSONでは null）。
    """

    model_config = ConfigDict(extra="forbid")

    method: IntervalMethod = Field(..., description="区間の構成法")
    delta: float | None = Field(..., description="δ（期待値区間ではNone）")
    alpha: float = Field(..., description="α")
    A: float | None = Field(None, description="区間の中心")
    B: float | None = Field(None, description="区間の半幅")
    L: float | None = Field(None, description="下限")
    U: float | None = Field(None, description="上限")
    J: int = Field(..., description="事後サンプル数")
    empirical_content: float = Field(..., description="経験的ベイズ内容")
    posterior_mean_nu: float | None = Field(None, description="νの事後平均")
    seed: int | None = Field(None, description="乱数シード")
    config: dict[str, Any] = Field(default_factory=dict, description="設定のエコー")
    diagnostics: dict[str, float] = Field(
        default_factory=dict, description="連鎖の診断量"
    )

    @field_validator("empirical_content")
    @classmethod
    def validate_content(cls, v: float) -> float:
        """内容は [0, 1] に収まる."""
        if not 0.0 <= v <= 1.0:
            raise ValueError("empirical_contentは0以上1以下である必要があります")
        return v

    @classmethod
    def from_interval(
        cls,
        interval: ToleranceInterval,
        seed: int | None = None,
        config: dict[str, Any] | None = None,
        diagnostics: dict[str, float] | None = None,
    ) -> IntervalReport:
        """ToleranceInterval からレポートを作成する."""
        geometry = interval.geometry
        return cls(
            method=interval.method,
            delta=interval.spec.delta if interval.spec is not None else None,
            alpha=interval.alpha,
            A=geometry.center if geometry is not None else None,
            B=geometry.half_length if geometry is not None else None,
            L=_finite_or_none(interval.lower),
            U=_finite_or_none(interval.upper),
            J=interval.J,
            empirical_content=interval.empirical_content,
            posterior_mean_nu=interval.metadata.get("posterior_mean"),
            seed=seed,
            config=config or {},
            diagnostics=diagnostics or {},
        )

    def summary_line(self) -> str:
        """スクリプト向けの1行要約 ``method delta alpha L U`` を返す."""
        lower = f"{self.L:.17g}" if self.L is not None else "-inf"
        upper = f"{self.U:.17g}" if self.U is not None else "inf"
        delta = f"{self.delta:.17g}" if self.delta is not None else "-"
        return f"{self.method.value} {delta} {self.alpha:.17g} {lower} {upper}"
