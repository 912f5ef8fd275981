"""事後サンプル・データセット・設定・レポートのファイル入出力.

数値は全て有効数字17桁の10進テキストで書き出し、倍精度を損失なく往復させる。
"""

import json
import logging
import math
from collections.abc import Iterator, Sequence
from pathlib import Path

import numpy as np
from pydantic import BaseModel, ValidationError

from tolerant.core.errors import ConfigurationError, ParseError
from tolerant.core.models import OneWayDataset, PosteriorDraws
from tolerant.schemas.simulation import StudyConfig

logger = logging.getLogger(__name__)

DRAWS_HEADER = ("nu", "tau")
DATASET_HEADER = ("group", "value")


def _fmt(value: float) -> str:
    return f"{value:.17g}"


def _data_lines(path: Path) -> Iterator[tuple[int, list[str]]]:
    """コメント行（#）と空行を除いた (行番号, フィールド) を返す."""
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ParseError(f"ファイルを読み込めません: {path}: {e}") from e
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        yield number, [field.strip() for field in line.split(",")]


def _parse_float(token: str, line_number: int, name: str) -> float:
    try:
        value = float(token)
    except ValueError as e:
        msg = f"{name} を数値として解釈できません: {token!r}"
        raise ParseError(msg, line_number) from e
    if not math.isfinite(value):
        raise ParseError(f"{name} が有限ではありません: {token!r}", line_number)
    return value


def _check_header(
    fields: list[str], expected: tuple[str, ...], line_number: int
) -> None:
    if tuple(f.lower() for f in fields) != expected:
        raise ParseError(
            f"ヘッダーは {','.join(expected)} である必要があります: {','.join(fields)}",
            line_number,
        )


def read_draws(path: Path) -> PosteriorDraws:
    """``nu,tau`` 形式の事後サンプルファイルを読み込む.

    Raises:
        ParseError: ヘッダー・数値・τ ≤ 0 の誤りを行番号付きで報告する
    """
    lines = _data_lines(path)
    header = next(lines, None)
    if header is None:
        raise ParseError(f"事後サンプルファイルが空です: {path}")
    _check_header(header[1], DRAWS_HEADER, header[0])

    nu: list[float] = []
    tau: list[float] = []
    for number, fields in lines:
        if len(fields) != 2:
            raise ParseError(f"2列が必要です（{len(fields)}列）", number)
        nu_j = _parse_float(fields[0], number, "nu")
        tau_j = _parse_float(fields[1], number, "tau")
        if tau_j <= 0:
            raise ParseError(f"tau は正である必要があります: {fields[1]}", number)
        nu.append(nu_j)
        tau.append(tau_j)
    if not nu:
        raise ParseError(f"事後サンプルがありません: {path}")
    logger.debug("事後サンプルを読み込みました: %s (J=%d)", path, len(nu))
    return PosteriorDraws(nu=np.array(nu), tau=np.array(tau))


def write_draws(path: Path, draws: PosteriorDraws) -> None:
    """事後サンプルを ``nu,tau`` 形式で書き出す."""
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [",".join(DRAWS_HEADER)]
    rows += [f"{_fmt(n)},{_fmt(t)}" for n, t in zip(draws.nu, draws.tau, strict=True)]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def read_dataset_rows(path: Path) -> list[tuple[str, float]]:
    """``group,value`` 形式のデータセットファイルを読み込む."""
    lines = _data_lines(path)
    header = next(lines, None)
    if header is None:
        raise ParseError(f"データセットファイルが空です: {path}")
    _check_header(header[1], DATASET_HEADER, header[0])

    rows = []
    for number, fields in lines:
        if len(fields) != 2 or not fields[0]:
            raise ParseError("group,value の2列が必要です", number)
        rows.append((fields[0], _parse_float(fields[1], number, "value")))
    return rows


def read_oneway_dataset(path: Path) -> OneWayDataset:
    """一元配置モデル用に群ごとにまとめて読み込む（2群以上）."""
    rows = read_dataset_rows(path)
    groups = {gid for gid, _ in rows}
    if len(groups) < 2:
        raise ParseError(f"一元配置モデルには2群以上が必要です（群数: {len(groups)}）")
    return OneWayDataset.from_rows(rows)


def read_iid_values(path: Path) -> np.ndarray:
    """i.i.d.モデル用に群を無視して値を読み込む（2個以上）."""
    values = np.array([value for _, value in read_dataset_rows(path)])
    if values.size < 2:
        raise ParseError(f"i.i.d.モデルには2個以上の値が必要です（{values.size}個）")
    return values


def write_dataset(path: Path, dataset: OneWayDataset) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    rows = [",".join(DATASET_HEADER)]
    for gid, values in dataset.groups:
        rows += [f"{gid},{_fmt(v)}" for v in values]
    path.write_text("\n".join(rows) + "\n", encoding="utf-8")


def describe_validation_error(error: ValidationError) -> str:
    """検証エラーをフィールド名付きの1行にまとめる."""
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def load_study_config(path: Path) -> StudyConfig:
    """JSON形式のシミュレーション設定を読み込む.

    Raises:
        ParseError: JSONとして解釈できない場合
        ConfigurationError: 未知のフィールドや値の誤りがある場合
    """
    try:
        document = json.loads(path.read_text(encoding="utf-8"))
    except OSError as e:
        raise ParseError(f"設定ファイルを読み込めません: {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ParseError(f"JSONの解析に失敗しました: {e.msg}", e.lineno) from e
    try:
        return StudyConfig.model_validate(document)
    except ValidationError as e:
        raise ConfigurationError(
            f"設定ファイルが不正です: {describe_validation_error(e)}"
        ) from e


def write_json(path: Path, model: BaseModel) -> None:
    """モデルをJSONとして書き出す（除外フィールドは含めない）."""
    path.parent.mkdir(parents=True, exist_ok=True)
    document = model.model_dump(mode="json")
    path.write_text(json.dumps(document, indent=2, ensure_ascii=False) + "\n", "utf-8")


def write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


def format_profile(
    centers: Sequence[float], halves: Sequence[float], marked: int
) -> str:
    """B(A) のプロファイルを ``A,B,posterior_mean`` の区切りテキストにする."""
    rows = ["A,B,posterior_mean"]
    for i, (a, b) in enumerate(zip(centers, halves, strict=True)):
        rows.append(f"{_fmt(a)},{_fmt(b)},{1 if i == marked else 0}")
    return "\n".join(rows) + "\n"
