"""保守的な経験分位点."""

import math

import numpy as np

from tolerant.core.errors import ConfigurationError


def quantile_rank(level: float, n: int) -> int:
    """経験 level 分位点の順位 ⌈level·n⌉（1始まり）を返す.

    level·n を小数9桁で丸めてから切り上げ、0.95·100 のような
    整数になるべき積が2進丸めで1つずれるのを防ぐ。
    """
    if n < 1:
        raise ConfigurationError("サンプル数は1以上である必要があります")
    rank = math.ceil(round(level * n, 9))
    return min(max(rank, 1), n)


def order_statistic(values: np.ndarray, level: float) -> float:
    """順位 ⌈level·n⌉ の順序統計量を返す.

    #{v ≤ 結果}/n ≥ level を常に満たす高い側の分位点。
    """
    values = np.asarray(values, dtype=np.float64).reshape(-1)
    k = quantile_rank(level, values.size) - 1
    return float(np.partition(values, k)[k])


def require_interior_rank(alpha: float, n: int) -> None:
    """(1−α) 分位点が最大値より内側に取れるだけのサンプル数 (J ≥ 1/α) を要求する."""
    if round(alpha * n, 9) < 1:
        raise ConfigurationError(
            f"サンプル数が不足しています: J={n}, α={alpha}（J ≥ 1/α が必要）"
        )
