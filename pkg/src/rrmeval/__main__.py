import sys

from rrmeval.cli import main

sys.exit(main())
