"""許容区間ソルバー."""
