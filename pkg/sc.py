#!/usr/bin/env python3
from slicecalc.cli import main

if __name__ == "__main__":
    raise SystemExit(main())
