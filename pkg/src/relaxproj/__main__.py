import sys

from relaxproj.cli import main

sys.exit(main())
