import sys

from qfhss.cli import main

sys.exit(main())
