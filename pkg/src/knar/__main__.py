import sys

from knar.cli import main

sys.exit(main())
