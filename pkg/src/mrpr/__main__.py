import sys

from mrpr.cli import main

sys.exit(main())
