import sys

from selfstab.cli import main

sys.exit(main())
