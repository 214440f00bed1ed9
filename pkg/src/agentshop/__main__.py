import sys

from agentshop.cli import main

sys.exit(main())
