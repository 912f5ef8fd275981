"""被覆率シミュレーションの設定とレポートのPydanticスキーマ定義."""

from pydantic import BaseModel, ConfigDict, Field, model_validator

from tolerant.schemas.sampling import ChainConfig, LmmPriorConfig
from tolerant.schemas.tolerance import CenterSearchConfig, ToleranceSpec


class SimulationScenario(BaseModel):
    """一元配置モデルの被覆率シミュレーションの1シナリオ.

    Note:
        級内相関 ρ = σ²/(d² + σ²) から σ² = d²·ρ/(1−ρ) を導出する。
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(..., min_length=1, description="シナリオ名（乱数の鍵にも使う）")
    nu_true: float = Field(0.0, description="真の全体平均 ν")
    d2_true: float = Field(1.0, gt=0.0, description="真の変量効果分散 d²")
    intra_correlation: float = Field(..., gt=0.0, lt=1.0, description="級内相関 ρ")
    m: int = Field(6, ge=2, description="群の数")
    group_sizes: tuple[int, ...] = Field(
        (2, 3, 4, 2, 3, 4), description="各群の観測数"
    )
    replicates: int = Field(1000, ge=1, description="反復数 K")
    spec: ToleranceSpec = Field(
        default_factory=ToleranceSpec, description="(δ, α) と許容誤差"
    )
    prior: LmmPriorConfig = Field(
        default_factory=LmmPriorConfig, description="事前分布の設定"
    )
    chain: ChainConfig = Field(
        default_factory=ChainConfig, description="連鎖の長さ（seedは反復ごとに導出）"
    )
    center_search: CenterSearchConfig = Field(
        default_factory=CenterSearchConfig, description="最適中心探索の設定"
    )
    seed: int = Field(20240101, ge=0, lt=2**63, description="マスターシード")

    @model_validator(mode="after")
    def validate_groups(self) -> "SimulationScenario":
        """群サイズの数は m と一致し、各群は1個以上の観測を持つ."""
        if len(self.group_sizes) != self.m:
            raise ValueError(
                f"group_sizesの長さ({len(self.group_sizes)})がm({self.m})と一致しません"
            )
        if any(size < 1 for size in self.group_sizes):
            raise ValueError("group_sizesの各要素は1以上である必要があります")
        return self

    @property
    def sigma2_true(self) -> float:
        rho = self.intra_correlation
        return self.d2_true * rho / (1.0 - rho)


class StudyConfig(BaseModel):
    """複数シナリオからなるシミュレーション研究の設定ファイル."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    name: str = Field(..., min_length=1, description="研究名")
    scenarios: list[SimulationScenario] = Field(
        ..., min_length=1, description="シナリオ一覧"
    )


class RatioSummary(BaseModel):
    """半幅比 B_optimal / B_fixed の分位点."""

    min: float
    q25: float
    median: float
    q75: float


class CoverageReport(BaseModel):
    """1シナリオの被覆率シミュレーション結果.

    実行時間とワーカー数はレポートファイルには書き出さない。
    """

    scenario: str = Field(..., description="シナリオ名")
    setup: str = Field(..., description="事前分布の組み方")
    intra_correlation: float = Field(..., description="級内相関 ρ")
    delta: float = Field(..., description="δ")
    alpha: float = Field(..., description="α")
    replicates: int = Field(..., description="要求された反復数 K")
    completed: int = Field(..., description="集計に使った反復数")
    excluded: list[int] = Field(
        default_factory=list, description="サンプラー失敗で除外した反復番号"
    )
    qualified_fraction: dict[str, float] = Field(
        ..., description="中心モードごとの適格区間の割合"
    )
    mc_standard_error: dict[str, float] = Field(
        ..., description="中心モードごとの二項標準誤差"
    )
    length_ratio: RatioSummary = Field(..., description="半幅比の分位点")
    shorter_fraction: float = Field(..., description="最適中心が真に短い反復の割合")
    tie_fraction: float = Field(..., description="半幅比が1の反復の割合")
    runtime_seconds: float = Field(0.0, exclude=True, description="実行時間")
    workers: int = Field(1, exclude=True, description="ワーカー数")


class StudyReport(BaseModel):
    """シミュレーション研究全体の結果."""

    name: str
    reports: list[CoverageReport]


class AsymptoticRow(BaseModel):
    """漸近診断の1行（標本サイズ n ごとの平均）."""

    n: int
    datasets: int
    correction_term: float = Field(..., description="ξ_α ξ_{δ/2} √(τ²/2) / √n")
    mean_half_length: float
    mean_formula: float
    mean_gap: float = Field(..., description="B̂ − 漸近半幅 の平均")
    mean_center_gap: float = Field(..., description="|A − x̄| の平均")
    scaled_excess: float = Field(..., description="√n·(B̂ − τ̂ξ_{δ/2}) の平均")
