"""Module entry point so `python -m subgrid` matches the installed script."""

from .cli import main

main()
