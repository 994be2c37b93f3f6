import sys

from magbill.cli import main

sys.exit(main())
