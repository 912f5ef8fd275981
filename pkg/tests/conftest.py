"""テスト共通のフィクスチャ."""

from pathlib import Path

import numpy as np
import pytest

from tolerant.core.models import PosteriorDraws
from tolerant.core.sampling.iid import gibbs_iid_normal
from tolerant.schemas.sampling import ChainConfig, IidPriorConfig, VarianceMode

CONFIG_DIR = Path(__file__).parent.parent / "configs"

# n=3, x̄=10, s²=1 のデータ
EXAMPLE_DATA = np.array([9.0, 10.0, 11.0])
EXAMPLE_PRIOR = IidPriorConfig(
    a=0.0, b=0.1, alpha0=0.01, beta0=0.01, variance_mode=VarianceMode.INDEPENDENT
)


def make_random_draws(rng: np.random.Generator, J: int) -> PosteriorDraws:
    """位置と尺度がばらついた事後サンプルを作る."""
    nu = rng.normal(0.0, 0.5, size=J)
    tau = np.exp(rng.normal(0.0, 0.3, size=J))
    return PosteriorDraws(nu=nu, tau=tau)


@pytest.fixture
def degenerate_draws() -> PosteriorDraws:
    """全て (0, 1) の事後サンプル（J=100）."""
    return PosteriorDraws(nu=np.zeros(100), tau=np.ones(100))


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def example_draws() -> PosteriorDraws:
    """独立事前分布の i.i.d. 正規モデルの事後サンプル."""
    chain = ChainConfig(iterations=22000, burn_in=2000, thin=1, seed=2024)
    return gibbs_iid_normal(EXAMPLE_DATA, EXAMPLE_PRIOR, chain)


def write_lines(path: Path, lines: list[str]) -> Path:
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return path
