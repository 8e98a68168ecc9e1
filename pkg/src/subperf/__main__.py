import sys

from subperf.cli import main

sys.exit(main())
