"""Entry point for the cdtoolkit command line."""

import sys

from .cli import cli


def main() -> None:
    """Main entry point for the cdtoolkit CLI."""
    sys.exit(cli())


if __name__ == "__main__":
    main()
