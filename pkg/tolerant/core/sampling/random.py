"""再現可能な乱数ストリーム.

(seed, key...) から SeedSequence の spawn_key で独立なストリームを導出する。
同じ鍵からは同じ系列が得られ、反復の実行順序やワーカー数に依存しない。
"""

import hashlib

import numpy as np


def chain_generator(seed: int, *keys: int) -> np.random.Generator:
    """(seed, keys) で一意に決まる PCG64 生成器を返す."""
    sequence = np.random.SeedSequence(entropy=int(seed), spawn_key=tuple(keys))
    return np.random.Generator(np.random.PCG64(sequence))


def stable_key(name: str) -> int:
    """名前から実行環境に依存しない64ビットの鍵を作る."""
    digest = hashlib.sha256(name.encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")


def draw_inverse_gamma(
    rng: np.random.Generator,
    shape: float,
    rate: float | np.ndarray,
    size: int | tuple[int, ...] | None = None,
) -> float | np.ndarray:
    """逆ガンマ分布 IG(shape, rate)（密度 ∝ x^(−shape−1) e^(−rate/x)）から抽出する."""
    return rate / rng.gamma(shape, 1.0, size=size)
