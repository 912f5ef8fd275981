"""一元配置変量効果モデルの被覆率シミュレーションと漸近診断.

反復ごとにデータ生成 → Gibbsサンプラー → 提案法（中心固定・最適中心）→
真のパラメータでの内容評価を行い、適格区間の割合と半幅比を集計する。
反復ごとの乱数は (マスターシード, シナリオ鍵, 反復番号) から導出するため、
結果はワーカー数や実行順序に依存しない。
"""

import logging
import math
import time
from collections.abc import Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import partial

import numpy as np

from tolerant.core.errors import SimulationError, ToleranceError
from tolerant.core.models import IntervalGeometry, OneWayDataset, PredictionParam
from tolerant.core.normal.distribution import interval_content, std_normal_quantile
from tolerant.core.sampling.iid import exact_conjugate_iid
from tolerant.core.sampling.oneway import gibbs_oneway
from tolerant.core.sampling.random import chain_generator, stable_key
from tolerant.core.solver.intervals import asymptotic_half_length, solve_proposed
from tolerant.schemas.sampling import IidPriorConfig, VarianceMode
from tolerant.schemas.simulation import (
    AsymptoticRow,
    CoverageReport,
    RatioSummary,
    SimulationScenario,
    StudyConfig,
    StudyReport,
)
from tolerant.schemas.tolerance import AsymptoticApprox, CenterMode, ToleranceSpec

logger = logging.getLogger(__name__)

MODES = (CenterMode.FIXED, CenterMode.OPTIMAL)
# 除外を許す失敗反復の割合（これ以上なら研究を中止する）
MAX_FAILURE_FRACTION = 0.01

_DATA_STREAM = 0
_CHAIN_STREAM = 1


@dataclass(frozen=True)
class ReplicateOutcome:
    """1反復の結果."""

    index: int
    half_fixed: float = math.nan
    half_optimal: float = math.nan
    content_fixed: float = math.nan
    content_optimal: float = math.nan
    error: str | None = None

    @property
    def failed(self) -> bool:
        return self.error is not None


def simulate_oneway_dataset(
    scenario: SimulationScenario, replicate_index: int
) -> OneWayDataset:
    """X_ik = ν + γ_i + e_ik（γ_i ~ N(0, d²), e_ik ~ N(0, σ²)）を生成する."""
    rng = chain_generator(
        scenario.seed, stable_key(scenario.name), replicate_index, _DATA_STREAM
    )
    gamma = rng.normal(0.0, math.sqrt(scenario.d2_true), size=scenario.m)
    sigma = math.sqrt(scenario.sigma2_true)
    groups = tuple(
        (f"g{i + 1}", scenario.nu_true + gamma[i] + rng.normal(0.0, sigma, size=n_i))
        for i, n_i in enumerate(scenario.group_sizes)
    )
    return OneWayDataset(groups=groups)


def true_theta(scenario: SimulationScenario) -> PredictionParam:
    return PredictionParam(
        nu=scenario.nu_true, tau=math.sqrt(scenario.d2_true + scenario.sigma2_true)
    )


def true_content(theta_true: PredictionParam, geom: IntervalGeometry) -> float:
    """生成パラメータにおける区間の真の内容 Q_θ[L, U]."""
    return interval_content(theta_true, geom)


def run_replicate(scenario: SimulationScenario, index: int) -> ReplicateOutcome:
    """1反復を実行する. サンプラー・ソルバーの失敗は結果として記録する."""
    try:
        dataset = simulate_oneway_dataset(scenario, index)
        rng = chain_generator(
            scenario.seed, stable_key(scenario.name), index, _CHAIN_STREAM
        )
        draws = gibbs_oneway(dataset, scenario.prior, scenario.chain, rng=rng)
        theta = true_theta(scenario)
        fixed = solve_proposed(draws, scenario.spec, CenterMode.FIXED)
        optimal = solve_proposed(
            draws, scenario.spec, CenterMode.OPTIMAL, scenario.center_search
        )
    except ToleranceError as e:
        return ReplicateOutcome(index=index, error=f"{type(e).__name__}: {e}")
    return ReplicateOutcome(
        index=index,
        half_fixed=fixed.geometry.half_length,
        half_optimal=optimal.geometry.half_length,
        content_fixed=true_content(theta, fixed.geometry),
        content_optimal=true_content(theta, optimal.geometry),
    )


def _run_replicates(
    scenario: SimulationScenario, replicates: int, workers: int
) -> list[ReplicateOutcome]:
    task = partial(run_replicate, scenario)
    indices = range(replicates)
    if workers <= 1:
        return [task(i) for i in indices]
    chunksize = max(1, replicates // (workers * 8))
    with ProcessPoolExecutor(max_workers=workers) as executor:
        # map は入力順に結果を返す
        return list(executor.map(task, indices, chunksize=chunksize))


def summarize_outcomes(
    scenario: SimulationScenario, outcomes: Sequence[ReplicateOutcome]
) -> CoverageReport:
    """反復結果を反復番号順に集計する.

    Raises:
        SimulationError: 失敗した反復が K の1%以上の場合
    """
    outcomes = sorted(outcomes, key=lambda o: o.index)
    failed = [o for o in outcomes if o.failed]
    total = len(outcomes)
    if failed and len(failed) >= MAX_FAILURE_FRACTION * total:
        raise SimulationError(
            f"{scenario.name}: 失敗した反復が多すぎます（{len(failed)}/{total}）: "
            f"{failed[0].error}"
        )
    for outcome in failed:
        logger.warning(
            "%s: 反復 %d を除外: %s", scenario.name, outcome.index, outcome.error
        )

    ok = [o for o in outcomes if not o.failed]
    level = 1.0 - scenario.spec.delta
    contents = {
        CenterMode.FIXED: np.array([o.content_fixed for o in ok]),
        CenterMode.OPTIMAL: np.array([o.content_optimal for o in ok]),
    }
    fractions = {mode.value: float(np.mean(contents[mode] >= level)) for mode in MODES}
    errors = {
        mode: math.sqrt(p * (1.0 - p) / len(ok)) for mode, p in fractions.items()
    }
    ratios = np.array([o.half_optimal / o.half_fixed for o in ok])
    q = np.quantile(ratios, [0.0, 0.25, 0.5, 0.75])
    return CoverageReport(
        scenario=scenario.name,
        setup=scenario.prior.setup.value,
        intra_correlation=scenario.intra_correlation,
        delta=scenario.spec.delta,
        alpha=scenario.spec.alpha,
        replicates=total,
        completed=len(ok),
        excluded=[o.index for o in failed],
        qualified_fraction=fractions,
        mc_standard_error=errors,
        length_ratio=RatioSummary(
            min=float(q[0]), q25=float(q[1]), median=float(q[2]), q75=float(q[3])
        ),
        shorter_fraction=float(np.mean(ratios < 1.0)),
        tie_fraction=float(np.mean(ratios == 1.0)),
    )


def run_coverage_study(
    scenario: SimulationScenario,
    workers: int = 1,
    replicates: int | None = None,
) -> CoverageReport:
    """1シナリオの被覆率シミュレーションを実行する.

    Args:
        scenario: シナリオ設定
        workers: 並列プロセス数（1なら逐次実行）
        replicates: 反復数の上書き（Noneならシナリオの値）

    Returns:
        集計結果
    """
    count = replicates if replicates is not None else scenario.replicates
    started = time.perf_counter()
    outcomes = _run_replicates(scenario, count, workers)
    report = summarize_outcomes(scenario, outcomes)
    report.runtime_seconds = time.perf_counter() - started
    report.workers = workers
    logger.info(
        "%s: K=%d, 適格割合 %s, %.1f秒",
        scenario.name, count, report.qualified_fraction, report.runtime_seconds,
    )
    return report


def run_study(
    study: StudyConfig, workers: int = 1, replicates: int | None = None
) -> StudyReport:
    """設定ファイルの全シナリオを順に実行する."""
    reports = [
        run_coverage_study(scenario, workers=workers, replicates=replicates)
        for scenario in study.scenarios
    ]
    return StudyReport(name=study.name, reports=reports)


def render_coverage_table(reports: Sequence[CoverageReport]) -> str:
    """集計結果を整列したテキスト表にする.

    上段は適格区間の割合（中心固定・最適中心と二項標準誤差）、
    下段は半幅比 B_optimal / B_fixed の分位点。
    """
    fixed, optimal = CenterMode.FIXED.value, CenterMode.OPTIMAL.value
    lines = [
        "Approximated confidence (fraction of qualified intervals)",
        f"{'scenario':<24} {'setup':<20} {'rho':>5} {'K':>6} "
        f"{'fixed':>7} {'(se)':>7} {'optimal':>7} {'(se)':>7}",
    ]
    for r in reports:
        lines.append(
            f"{r.scenario:<24} {r.setup:<20} {r.intra_correlation:>5.2f} "
            f"{r.completed:>6d} "
            f"{r.qualified_fraction[fixed]:>7.3f} {r.mc_standard_error[fixed]:>7.4f} "
            f"{r.qualified_fraction[optimal]:>7.3f} "
            f"{r.mc_standard_error[optimal]:>7.4f}"
        )
    lines += [
        "",
        "Interval length at optimal center relative to posterior-mean center",
        f"{'scenario':<24} {'setup':<20} {'rho':>5} "
        f"{'min':>7} {'q25':>7} {'median':>7} {'q75':>7} {'shorter':>8} {'ties':>6}",
    ]
    for r in reports:
        q = r.length_ratio
        lines.append(
            f"{r.scenario:<24} {r.setup:<20} {r.intra_correlation:>5.2f} "
            f"{q.min:>7.4f} {q.q25:>7.4f} {q.median:>7.4f} {q.q75:>7.4f} "
            f"{r.shorter_fraction:>8.3f} {r.tie_fraction:>6.3f}"
        )
    return "\n".join(lines) + "\n"


def run_asymptotic_diagnostic(
    n_values: Sequence[int],
    theta_true: PredictionParam,
    spec: ToleranceSpec,
    datasets: int = 200,
    n_draws: int = 10_000,
    seed: int = 0,
    prior: IidPriorConfig | None = None,
) -> list[AsymptoticRow]:
    """提案区間の半幅と漸近展開 τ̂ξ_{δ/2} + ξ_αξ_{δ/2}√Σ₂₂/√n を比較する.

    各 n について i.i.d.正規データを datasets 個生成し、比例事前分布の
    厳密事後サンプルから中心固定の提案区間を求める。Σ₂₂ = τ̂²/2、
    τ̂ は最尤推定値。

    Raises:
        UnsupportedModeError: 比例事前分布以外が指定された場合
    """
    prior = prior or IidPriorConfig(
        a=0.0, b=0.001, alpha0=0.001, beta0=0.001,
        variance_mode=VarianceMode.PROPORTIONAL,
    )
    xi_half_delta = -std_normal_quantile(spec.delta / 2.0)
    xi_alpha = -std_normal_quantile(spec.alpha)
    rows = []
    for n in n_values:
        gaps, halves, formulas, center_gaps, excess = [], [], [], [], []
        for k in range(datasets):
            rng = chain_generator(seed, int(n), k)
            data = rng.normal(theta_true.nu, theta_true.tau, size=int(n))
            draws = exact_conjugate_iid(data, prior, n_draws=n_draws, rng=rng)
            interval = solve_proposed(draws, spec, CenterMode.FIXED)
            tau_hat = float(np.std(data))
            formula = asymptotic_half_length(
                AsymptoticApprox(tau_hat=tau_hat, sigma22=tau_hat**2 / 2.0, n=int(n)),
                spec,
            )
            half = interval.geometry.half_length
            halves.append(half)
            formulas.append(formula)
            gaps.append(half - formula)
            center_gaps.append(abs(interval.geometry.center - float(np.mean(data))))
            excess.append(math.sqrt(n) * (half - tau_hat * xi_half_delta))
        correction = xi_alpha * xi_half_delta * theta_true.tau / math.sqrt(2.0 * n)
        rows.append(
            AsymptoticRow(
                n=int(n),
                datasets=datasets,
                correction_term=correction,
                mean_half_length=float(np.mean(halves)),
                mean_formula=float(np.mean(formulas)),
                mean_gap=float(np.mean(gaps)),
                mean_center_gap=float(np.mean(center_gaps)),
                scaled_excess=float(np.mean(excess)),
            )
        )
        logger.info(
            "漸近診断 n=%d: 平均差 %.4g（補正 %.4g）", n, rows[-1].mean_gap, correction
        )
    return rows


def render_asymptotic_table(rows: Sequence[AsymptoticRow]) -> str:
    lines = [
        f"{'n':>6} {'K':>5} {'B_hat':>9} {'formula':>9} {'gap':>9} "
        f"{'correction':>10} {'|A-xbar|':>9} {'sqrt(n)*excess':>14}"
    ]
    for r in rows:
        lines.append(
            f"{r.n:>6d} {r.datasets:>5d} {r.mean_half_length:>9.5f} "
            f"{r.mean_formula:>9.5f} {r.mean_gap:>9.5f} {r.correction_term:>10.5f} "
            f"{r.mean_center_gap:>9.5f} {r.scaled_excess:>14.4f}"
        )
    return "\n".join(lines) + "\n"
