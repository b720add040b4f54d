import sys

from peakonlab.cli import main

sys.exit(main())
