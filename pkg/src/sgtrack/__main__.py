import sys

from sgtrack.cli import main

sys.exit(main())
