"""設定とレポートのPydanticスキーマ."""

from tolerant.schemas.sampling import (
    ChainConfig,
    IidPriorConfig,
    LmmPriorConfig,
    LmmSetup,
    VarianceMode,
)
from tolerant.schemas.simulation import (
    AsymptoticRow,
    CoverageReport,
    RatioSummary,
    SimulationScenario,
    StudyConfig,
    StudyReport,
)
from tolerant.schemas.tolerance import (
    AsymptoticApprox,
    CenterMode,
    CenterSearchConfig,
    IntervalMethod,
    IntervalReport,
    Side,
    ToleranceSpec,
    WkmVariant,
)

__all__ = [
    "AsymptoticApprox",
    "AsymptoticRow",
    "CenterMode",
    "CenterSearchConfig",
    "ChainConfig",
    "CoverageReport",
    "IidPriorConfig",
    "IntervalMethod",
    "IntervalReport",
    "LmmPriorConfig",
    "LmmSetup",
    "RatioSummary",
    "Side",
    "SimulationScenario",
    "StudyConfig",
    "StudyReport",
    "ToleranceSpec",
    "VarianceMode",
    "WkmVariant",
]
