"""Module entry point for python -m conic_census."""

import sys

from .cli import main

sys.exit(main())
