"""``python -m tolerant`` エントリーポイント."""

from tolerant.cli import cli

if __name__ == "__main__":
    cli()
