"""事後サンプラー."""
