"""`python -m hdr` entry point."""

from hdr.cli import main

raise SystemExit(main())
