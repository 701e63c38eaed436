# File: main.py

import logging
import sys

from controllers.cli_controller import parse_and_dispatch

LOG_FORMAT = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'


def main():
    # --log-level is applied by the CLI controller once argv is parsed
    logging.basicConfig(level=logging.INFO, format=LOG_FORMAT)
    sys.exit(parse_and_dispatch(sys.argv[1:]))


if __name__ == "__main__":
    main()
