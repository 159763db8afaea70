import sys

from sublevel.cli import main

sys.exit(main())
