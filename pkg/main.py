import sys

from acoustic_cwt.cli import main


if __name__ == "__main__":
    sys.exit(main())
