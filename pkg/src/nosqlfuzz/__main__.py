import sys

from nosqlfuzz.cli import main

sys.exit(main())
