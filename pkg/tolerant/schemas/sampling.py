"""事後サンプラーの事前分布と連鎖設定のPydanticスキーマ定義."""

from enum import Enum

from pydantic import BaseModel, ConfigDict, Field, model_validator


class VarianceMode(str, Enum):
    """i.i.d.正規モデルにおける ν の事前分散の形."""

    PROPORTIONAL = "proportional"  # ν | τ ~ N(a, τ²/b)
    INDEPENDENT = "independent"  # ν ~ N(a, 1/b)


class LmmSetup(str, Enum):
    """一元配置モデルの事前分布の組み方."""

    VANILLA = "vanilla"
    PARAMETER_EXPANSION = "parameter_expansion"


class IidPriorConfig(BaseModel):
    """i.i.d.正規モデルの事前分布."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    a: float = Field(0.0, description="νの事前平均")
    b: float = Field(1.0, gt=0.0, description="νの事前精度の尺度")
    alpha0: float = Field(0.01, gt=0.0, description="τ²の逆ガンマ事前分布の形状")
    beta0: float = Field(0.01, gt=0.0, description="τ²の逆ガンマ事前分布のレート")
    variance_mode: VarianceMode = Field(
        VarianceMode.PROPORTIONAL, description="νの事前分散の形"
    )


class LmmPriorConfig(BaseModel):
    """一元配置変量効果モデルの事前分布.

    逆ガンマの超パラメータは全て (形状, レート) の順で既定値は (0.001, 0.001)。
    """

    model_config = ConfigDict(extra="forbid", frozen=True)

    setup: LmmSetup = Field(LmmSetup.VANILLA, description="事前分布の組み方")
    nu_prior_variance: float = Field(
        1000.0, gt=0.0, description="vanilla設定での νの事前分散"
    )
    d2_shape: float = Field(0.001, gt=0.0, description="d²の形状")
    d2_rate: float = Field(0.001, gt=0.0, description="d²のレート")
    sigma2_shape: float = Field(0.001, gt=0.0, description="σ²の形状")
    sigma2_rate: float = Field(0.001, gt=0.0, description="σ²のレート")
    sigma02_shape: float = Field(0.001, gt=0.0, description="σ₀²の形状")
    sigma02_rate: float = Field(0.001, gt=0.0, description="σ₀²のレート")
    omega2_shape: float = Field(0.001, gt=0.0, description="ω²の形状")
    omega2_rate: float = Field(0.001, gt=0.0, description="ω²のレート")
    xi_prior_variance: float = Field(1.0, gt=0.0, description="ξの事前分散")


class ChainConfig(BaseModel):
    """MCMC連鎖の長さと乱数シード."""

    model_config = ConfigDict(extra="forbid", frozen=True)

    iterations: int = Field(12000, ge=1, description="総反復回数")
    burn_in: int = Field(2000, ge=0, description="捨てる初期反復の数")
    thin: int = Field(1, ge=1, description="間引き間隔")
    seed: int = Field(0, ge=0, lt=2**64, description="乱数シード")

    @model_validator(mode="after")
    def validate_burn_in(self) -> "ChainConfig":
        """burn_in は iterations より小さい."""
        if self.burn_in >= self.iterations:
            raise ValueError("burn_inはiterationsより小さい必要があります")
        return self

    @property
    def retained(self) -> int:
        """保持されるサンプル数."""
        return len(range(self.burn_in, self.iterations, self.thin))

    def keeps(self, iteration: int) -> bool:
        """0始まりの反復番号が保持対象か."""
        return iteration >= self.burn_in and (iteration - self.burn_in) % self.thin == 0
