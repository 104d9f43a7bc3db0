from wdment.cli import main
import sys

sys.exit(main())
