import sys

from helmholtz_chdg.cli import main

sys.exit(main())
