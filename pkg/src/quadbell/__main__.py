import sys

from quadbell.cli import main

sys.exit(main())
