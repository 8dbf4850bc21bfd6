"""Documentation for sehs."""
