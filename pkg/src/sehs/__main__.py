"""Run the command-line interface with `python -m sehs`."""

from __future__ import annotations

from sehs.cli import main

main()
