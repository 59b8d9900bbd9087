import sys

from nlrabi.cli import main

sys.exit(main())
