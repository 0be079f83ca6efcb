import sys

from spincat.cli import main

sys.exit(main())
