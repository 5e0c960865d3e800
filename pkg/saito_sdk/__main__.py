import sys

from saito_sdk.cli import main

sys.exit(main())
