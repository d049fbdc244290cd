import sys

from emergent.cli import main

sys.exit(main())
