"""ファイル入出力."""
