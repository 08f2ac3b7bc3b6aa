import sys

from absorbwave.cli import main

sys.exit(main())
