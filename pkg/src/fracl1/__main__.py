import sys

from fracl1.cli import main

sys.exit(main())
