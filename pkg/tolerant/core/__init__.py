"""数値計算コア."""
