"""Main entry point for CWSSNet"""

import sys

from dotenv import load_dotenv

# Environment must be loaded before settings are instantiated
load_dotenv()

from cli.app import main  # noqa: E402


if __name__ == "__main__":
    sys.exit(main())
