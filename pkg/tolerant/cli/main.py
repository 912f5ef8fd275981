"""コマンドラインインターフェース.

終了コード: 0 成功、2 入力・設定の誤り、3 ソルバー・サンプラー・シミュレーションの失敗。
標準出力の要約行 ``method delta alpha L U`` はスクリプトから解析できる形式を保つ。
"""

import logging
from collections.abc import Iterator
from contextlib import contextmanager
from pathlib import Path

import click
import numpy as np
from pydantic import ValidationError

from tolerant.core.errors import (
    ConfigurationError,
    DomainError,
    ParseError,
    ToleranceError,
)
from tolerant.core.models import PosteriorDraws, PredictionParam, ToleranceInterval
from tolerant.core.sampling.diagnostics import effective_sample_size, mc_standard_error
from tolerant.core.sampling.iid import exact_conjugate_iid, gibbs_iid_normal
from tolerant.core.sampling.oneway import gibbs_oneway
from tolerant.core.simulation.harness import (
    render_asymptotic_table,
    render_coverage_table,
    run_asymptotic_diagnostic,
    run_study,
)
from tolerant.core.solver.intervals import (
    compare_methods,
    half_length_profile,
    solve_expectation,
    solve_one_sided,
    solve_proposed,
    solve_wkm,
)
from tolerant.io.files import (
    describe_validation_error,
    format_profile,
    load_study_config,
    read_draws,
    read_iid_values,
    read_oneway_dataset,
    write_draws,
    write_json,
    write_text,
)
from tolerant.schemas.sampling import (
    ChainConfig,
    IidPriorConfig,
    LmmPriorConfig,
    LmmSetup,
    VarianceMode,
)
from tolerant.schemas.simulation import StudyReport
from tolerant.schemas.tolerance import (
    CenterMode,
    IntervalReport,
    Side,
    ToleranceSpec,
    WkmVariant,
)

logger = logging.getLogger(__name__)

EXIT_INPUT_ERROR = 2
EXIT_SOLVER_ERROR = 3

METHODS = ("proposed", "wkm-w", "wkm-km", "expectation", "upper", "lower")
PROBABILITY = click.FloatRange(0.0, 1.0, min_open=True, max_open=True)


@contextmanager
def exit_codes() -> Iterator[None]:
    """ドメイン例外を終了コード 2 / 3 に変換する."""
    try:
        yield
    except ValidationError as e:
        click.echo(f"❌ 設定エラー: {describe_validation_error(e)}", err=True)
        raise click.exceptions.Exit(EXIT_INPUT_ERROR) from e
    except (ParseError, ConfigurationError, DomainError) as e:
        click.echo(f"❌ 入力エラー: {e}", err=True)
        raise click.exceptions.Exit(EXIT_INPUT_ERROR) from e
    except ToleranceError as e:
        click.echo(f"❌ 計算エラー: {e}", err=True)
        raise click.exceptions.Exit(EXIT_SOLVER_ERROR) from e


def _solve(
    draws: PosteriorDraws,
    spec: ToleranceSpec,
    method: str,
    center: str | None,
) -> ToleranceInterval:
    if method == "proposed":
        mode = CenterMode.OPTIMAL if center == "optimal" else CenterMode.FIXED
        return solve_proposed(draws, spec, mode)
    if method == "wkm-w":
        return solve_wkm(draws, spec, WkmVariant.W)
    if method == "wkm-km":
        return solve_wkm(draws, spec, WkmVariant.KM)
    if method == "expectation":
        return solve_expectation(draws, spec.alpha)
    return solve_one_sided(draws, spec, Side(method))


def _emit(report: IntervalReport, out: Path | None) -> None:
    click.echo(report.summary_line())
    if out is not None:
        write_json(out, report)
        logger.info("レポートを書き出しました: %s", out)


def solve_options(func):
    """solve と fit-solve に共通の区間計算オプション."""
    options = [
        click.option("--delta", type=PROBABILITY, default=0.1, show_default=True,
                     help="内容の不足確率 δ"),
        click.option("--alpha", type=PROBABILITY, default=0.05, show_default=True,
                     help="事後確率の不足 α"),
        click.option("--method", type=click.Choice(METHODS), default="proposed",
                     show_default=True, help="区間の構成法"),
        click.option("--center", type=click.Choice(["mean", "optimal"]), default=None,
                     help="提案法の中心（proposed のみ、既定: mean）"),
        click.option("--root-tol", type=click.FloatRange(min=0.0, min_open=True),
                     default=1e-4, show_default=True, help="g_j の残差の許容値"),
        click.option("--out", type=click.Path(dir_okay=False, path_type=Path),
                     default=None, help="レポート（JSON）の出力先"),
    ]
    for option in reversed(options):
        func = option(func)
    return func


def _check_center(method: str, center: str | None) -> None:
    if center is not None and method != "proposed":
        raise click.UsageError("--center は --method proposed と併用してください")


@click.group()
@click.option("-v", "--verbose", is_flag=True, help="詳細なログを標準エラーに出力")
def cli(verbose: bool) -> None:
    """事後サンプルからベイズ許容区間を計算するツール"""
    logging.basicConfig(
        level=logging.INFO if verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )


@cli.command()
@click.option("--draws", "draws_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="事後サンプルファイル（nu,tau）")
@solve_options
def solve(
    draws_path: Path,
    delta: float,
    alpha: float,
    method: str,
    center: str | None,
    root_tol: float,
    out: Path | None,
) -> None:
    """事後サンプルファイルから許容区間を計算する

    Examples:
        tolerant solve --draws draws.csv --delta 0.1 --alpha 0.05 --center optimal
    """
    _check_center(method, center)
    with exit_codes():
        draws = read_draws(draws_path)
        spec = ToleranceSpec(delta=delta, alpha=alpha, root_tol=root_tol)
        interval = _solve(draws, spec, method, center)
        config = {"draws": str(draws_path), "method": method, "center": center}
        _emit(IntervalReport.from_interval(interval, config=config), out)


@cli.command("fit-solve")
@click.option("--data", "data_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="データセットファイル（group,value）")
@click.option("--model", type=click.Choice(["iid", "oneway"]), required=True,
              help="観測モデル")
@click.option("--prior", type=click.Choice(["vanilla", "px", "conjugate"]),
              default="vanilla", show_default=True,
              help="事前分布（iid: vanilla, conjugate / oneway: vanilla, px）")
@click.option("--variance-mode", type=click.Choice([m.value for m in VarianceMode]),
              default=VarianceMode.PROPORTIONAL.value, show_default=True,
              help="iidモデルでの νの事前分散の形")
@click.option("--a", "prior_a", type=float, default=0.0, show_default=True,
              help="iidモデルの νの事前平均 a")
@click.option("--b", "prior_b", type=float, default=1.0, show_default=True,
              help="iidモデルの事前精度尺度 b")
@click.option("--alpha0", type=float, default=0.01, show_default=True,
              help="iidモデルの τ²事前分布の形状")
@click.option("--beta0", type=float, default=0.01, show_default=True,
              help="iidモデルの τ²事前分布のレート")
@click.option("--iters", type=int, default=12000, show_default=True, help="総反復回数")
@click.option("--burnin", type=int, default=2000, show_default=True, help="burn-in")
@click.option("--thin", type=int, default=1, show_default=True, help="間引き間隔")
@click.option("--seed", type=int, default=0, envvar="TOLERANT_SEED", show_default=True,
              help="乱数シード（環境変数 TOLERANT_SEED）")
@click.option("--save-draws", type=click.Path(dir_okay=False, path_type=Path),
              default=None, help="事後サンプルの保存先")
@solve_options
def fit_solve(
    data_path: Path,
    model: str,
    prior: str,
    variance_mode: str,
    prior_a: float,
    prior_b: float,
    alpha0: float,
    beta0: float,
    iters: int,
    burnin: int,
    thin: int,
    seed: int,
    save_draws: Path | None,
    delta: float,
    alpha: float,
    method: str,
    center: str | None,
    root_tol: float,
    out: Path | None,
) -> None:
    """データセットから事後サンプルを生成し、許容区間を計算する

    Examples:
        tolerant fit-solve --data data.csv --model oneway --prior px --seed 1
    """
    _check_center(method, center)
    with exit_codes():
        chain = ChainConfig(iterations=iters, burn_in=burnin, thin=thin, seed=seed)
        draws, diagnostics = _fit(
            data_path, model, prior, variance_mode,
            (prior_a, prior_b, alpha0, beta0), chain,
        )
        if save_draws is not None:
            write_draws(save_draws, draws)
            logger.info("事後サンプルを書き出しました: %s", save_draws)
        spec = ToleranceSpec(delta=delta, alpha=alpha, root_tol=root_tol)
        interval = _solve(draws, spec, method, center)
        config = {
            "data": str(data_path), "model": model, "prior": prior,
            "variance_mode": variance_mode, "a": prior_a, "b": prior_b,
            "alpha0": alpha0, "beta0": beta0, "iterations": iters,
            "burn_in": burnin, "thin": thin, "method": method, "center": center,
        }
        report = IntervalReport.from_interval(
            interval, seed=seed, config=config, diagnostics=diagnostics
        )
        _emit(report, out)


def _fit(
    data_path: Path,
    model: str,
    prior: str,
    variance_mode: str,
    hyper: tuple[float, float, float, float],
    chain: ChainConfig,
) -> tuple[PosteriorDraws, dict[str, float]]:
    if model == "iid":
        a, b, alpha0, beta0 = hyper
        iid_prior = IidPriorConfig(
            a=a, b=b, alpha0=alpha0, beta0=beta0,
            variance_mode=VarianceMode(variance_mode),
        )
        values = read_iid_values(data_path)
        if prior == "conjugate":
            draws = exact_conjugate_iid(
                values, iid_prior, n_draws=chain.retained, seed=chain.seed
            )
            return draws, {}
        if prior == "px":
            raise ConfigurationError("iidモデルでは px 事前分布は使えません")
        draws = gibbs_iid_normal(values, iid_prior, chain)
    else:
        if prior == "conjugate":
            raise ConfigurationError("oneway モデルでは conjugate 事前分布は使えません")
        setup = LmmSetup.PARAMETER_EXPANSION if prior == "px" else LmmSetup.VANILLA
        draws = gibbs_oneway(
            read_oneway_dataset(data_path), LmmPriorConfig(setup=setup), chain
        )
    return draws, _chain_diagnostics(draws)


def _chain_diagnostics(draws: PosteriorDraws) -> dict[str, float]:
    if draws.J < 4:
        return {}
    with np.errstate(all="ignore"):
        return {
            "ess_nu": effective_sample_size(draws.nu),
            "ess_tau": effective_sample_size(draws.tau),
            "mcse_nu": mc_standard_error(draws.nu),
            "mcse_tau": mc_standard_error(draws.tau),
        }


@cli.command()
@click.option("--draws", "draws_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="事後サンプルファイル（nu,tau）")
@click.option("--delta", type=PROBABILITY, default=0.1, show_default=True, help="δ")
@click.option("--alpha", type=PROBABILITY, default=0.05, show_default=True, help="α")
@click.option("--grid-lo", type=float, default=None,
              help="格子の下端（既定: 事後平均 − 2SD、SD=0 なら − 2·平均τ）")
@click.option("--grid-hi", type=float, default=None,
              help="格子の上端（既定: 事後平均 + 2SD、SD=0 なら + 2·平均τ）")
@click.option("--grid-n", type=click.IntRange(min=3), default=41, show_default=True,
              help="格子点の数")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="出力先（既定: 標準出力）")
def profile(
    draws_path: Path,
    delta: float,
    alpha: float,
    grid_lo: float | None,
    grid_hi: float | None,
    grid_n: int,
    out: Path | None,
) -> None:
    """中心 A ごとの最小半幅 B(A) を区切りテキストで出力する

    事後平均に最も近い行の posterior_mean 列が 1 になる。
    """
    with exit_codes():
        draws = read_draws(draws_path)
        mean = draws.mean_nu()
        sd = float(np.std(draws.nu, ddof=1)) if draws.J > 1 else 0.0
        # ν が一定なら τ の平均で幅を決める
        width = 2.0 * (sd if sd > 0.0 else float(np.mean(draws.tau)))
        lo = grid_lo if grid_lo is not None else mean - width
        hi = grid_hi if grid_hi is not None else mean + width
        if not lo < hi:
            raise ConfigurationError(f"格子の範囲が不正です: [{lo}, {hi}]")
        spec = ToleranceSpec(delta=delta, alpha=alpha)
        centers, halves = half_length_profile(draws, spec, np.linspace(lo, hi, grid_n))
        marked = int(np.argmin(np.abs(centers - mean)))
        text = format_profile(centers, halves, marked)
        if out is None:
            click.echo(text, nl=False)
        else:
            write_text(out, text)
            click.echo(f"✅ プロファイルを書き出しました: {out}")


@cli.command()
@click.option("--draws", "draws_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="事後サンプルファイル（nu,tau）")
@click.option("--delta", type=PROBABILITY, default=0.1, show_default=True, help="δ")
@click.option("--alpha", type=PROBABILITY, default=0.05, show_default=True, help="α")
def compare(draws_path: Path, delta: float, alpha: float) -> None:
    """全ての両側構成法を同じ事後サンプルで比較する"""
    with exit_codes():
        draws = read_draws(draws_path)
        spec = ToleranceSpec(delta=delta, alpha=alpha)
        for interval in compare_methods(draws, spec):
            click.echo(IntervalReport.from_interval(interval).summary_line())


@cli.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False, path_type=Path),
              help="シミュレーション設定（JSON）")
@click.option("--replicates", type=click.IntRange(min=1), default=None,
              help="反復数 K の上書き")
@click.option("--workers", type=click.IntRange(min=1), default=1, show_default=True,
              help="並列プロセス数")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), required=True,
              help="レポート（JSON）の出力先。表は同名の .txt に書き出す")
def simulate(
    config_path: Path, replicates: int | None, workers: int, out: Path
) -> None:
    """被覆率シミュレーションを実行する

    Examples:
        tolerant simulate --config configs/table2_vanilla.json --out out.json
    """
    with exit_codes():
        study = load_study_config(config_path)
        report: StudyReport = run_study(study, workers=workers, replicates=replicates)
        table = render_coverage_table(report.reports)
        write_json(out, report)
        write_text(out.with_suffix(".txt"), table)
        click.echo(table, nl=False)


@cli.command()
@click.option("--n", "n_values", type=click.IntRange(min=2), multiple=True,
              default=(50, 200, 800), show_default=True, help="標本サイズ（複数可）")
@click.option("--datasets", type=click.IntRange(min=1), default=200, show_default=True,
              help="標本サイズごとのデータセット数")
@click.option("--draws", "n_draws", type=click.IntRange(min=1), default=10_000,
              show_default=True, help="データセットごとの事後サンプル数")
@click.option("--seed", type=int, default=0, envvar="TOLERANT_SEED", show_default=True,
              help="乱数シード（環境変数 TOLERANT_SEED）")
@click.option("--delta", type=PROBABILITY, default=0.1, show_default=True, help="δ")
@click.option("--alpha", type=PROBABILITY, default=0.05, show_default=True, help="α")
@click.option("--out", type=click.Path(dir_okay=False, path_type=Path), default=None,
              help="表の出力先")
def asymptotic(
    n_values: tuple[int, ...],
    datasets: int,
    n_draws: int,
    seed: int,
    delta: float,
    alpha: float,
    out: Path | None,
) -> None:
    """提案区間の半幅を漸近展開と比較する（θ = (0, 1)）"""
    with exit_codes():
        spec = ToleranceSpec(delta=delta, alpha=alpha)
        rows = run_asymptotic_diagnostic(
            n_values, PredictionParam(0.0, 1.0), spec,
            datasets=datasets, n_draws=n_draws, seed=seed,
        )
        table = render_asymptotic_table(rows)
        if out is not None:
            write_text(out, table)
        click.echo(table, nl=False)
