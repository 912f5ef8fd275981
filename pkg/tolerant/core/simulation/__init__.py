"""被覆率シミュレーション."""
