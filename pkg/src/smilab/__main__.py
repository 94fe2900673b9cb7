import sys

from smilab.cli import main

sys.exit(main())
