"""MCMC連鎖の診断量."""

import numpy as np

from tolerant.core.errors import DiagnosticsError


def autocorrelation(x: np.ndarray) -> np.ndarray:
    """FFTで自己相関関数を計算する（ラグ0で1）."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = x.size
    centered = x - x.mean()
    size = 1 << (2 * n - 1).bit_length()
    spectrum = np.fft.rfft(centered, n=size)
    acov = np.fft.irfft(spectrum * np.conjugate(spectrum), n=size)[:n]
    if acov[0] <= 0:
        raise DiagnosticsError("連鎖が定数のため自己相関を計算できません")
    return acov / acov[0]


def effective_sample_size(x: np.ndarray) -> float:
    """Geyerの初期正系列による有効サンプルサイズ.

    隣接ラグの対 ρ_{2k} + ρ_{2k+1} が正である間だけ和を取る。
    """
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = x.size
    if n < 4:
        raise DiagnosticsError(f"ESSには4個以上のサンプルが必要です: {n}")
    rho = autocorrelation(x)
    pairs = rho[: n - n % 2].reshape(-1, 2).sum(axis=1)
    positive = np.flatnonzero(pairs <= 0)
    stop = int(positive[0]) if positive.size else pairs.size
    tau_int = -1.0 + 2.0 * float(pairs[:stop].sum())
    return float(n / max(tau_int, 1.0 / n))


def mc_standard_error(x: np.ndarray) -> float:
    """バッチ平均法によるモンテカルロ標準誤差（バッチ数 ⌊√n⌋）."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    n = x.size
    batches = int(np.sqrt(n))
    if batches < 2:
        raise DiagnosticsError(f"バッチ平均法には4個以上のサンプルが必要です: {n}")
    size = n // batches
    means = x[: batches * size].reshape(batches, size).mean(axis=1)
    return float(means.std(ddof=1) / np.sqrt(batches))
