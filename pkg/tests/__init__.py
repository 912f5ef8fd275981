"""tolerant のテストスイート."""
