"""コマンドラインインターフェース."""

from tolerant.cli.main import cli

__all__ = ["cli"]
