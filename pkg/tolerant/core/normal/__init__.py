"""正規分布の基本演算."""
