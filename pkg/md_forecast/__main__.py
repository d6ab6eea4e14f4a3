"""Entry point for `python -m md_forecast`."""

import sys

from md_forecast.cli import main

if __name__ == "__main__":
    sys.exit(main())
