import sys

from fairwalks.cli import main

sys.exit(main())
