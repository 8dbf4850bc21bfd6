"""Population-sized acceptance runs."""
