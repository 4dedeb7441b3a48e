import sys

from qwell.main import main

sys.exit(main())
