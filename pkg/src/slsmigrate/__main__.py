import sys

from slsmigrate.cli import main

sys.exit(main())
