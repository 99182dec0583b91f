import sys

from mvprune.cli import main

sys.exit(main())
