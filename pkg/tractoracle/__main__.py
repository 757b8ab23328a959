from __future__ import annotations

import sys

from tractoracle.cli import main


sys.exit(main())
