from lndkit.cli import main
import sys
sys.exit(main())
