"""許容区間計算で送出する例外の定義."""


class ToleranceError(Exception):
    """tolerant パッケージの全例外の基底クラス."""


class DomainError(ToleranceError, ValueError):
    """数値入力が定義域外（非有限値、τ ≤ 0、確率が (0,1) 外など）."""


class ConfigurationError(ToleranceError, ValueError):
    """設定値の組み合わせが不正、またはサンプル数が不足している."""


class UnsupportedModeError(ConfigurationError):
    """指定されたモードの組み合わせに対応する手法が存在しない."""


class ParseError(ToleranceError, ValueError):
    """入力ファイルの解析に失敗した.

    Attributes:
        line_number: 問題のある行番号（1始まり、不明な場合はNone）
    """

    def __init__(self, message: str, line_number: int | None = None):
        self.line_number = line_number
        if line_number is not None:
            message = f"{line_number}行目: {message}"
        super().__init__(message)


class SolverError(ToleranceError, RuntimeError):
    """求根が収束しなかった.

    Attributes:
        draw_index: 失敗した事後サンプルの番号（0始まり）
    """

    def __init__(self, message: str, draw_index: int | None = None):
        self.draw_index = draw_index
        super().__init__(message)


class DiagnosticsError(ToleranceError, RuntimeError):
    """サンプラーの入力または状態が退化している."""


class LinearAlgebraError(ToleranceError, RuntimeError):
    """線形方程式系が特異で解けない.

    Attributes:
        matrix_name: 特異と判定された行列の名前
    """

    def __init__(self, message: str, matrix_name: str):
        self.matrix_name = matrix_name
        super().__init__(f"{matrix_name}: {message}")


class SimulationError(ToleranceError, RuntimeError):
    """シミュレーション研究を継続できない（失敗した反復が多すぎる等）."""
