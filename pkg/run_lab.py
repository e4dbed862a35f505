#!/usr/bin/env python

import sys
from hottlab import cli

if __name__ == '__main__':
    sys.exit(cli.main())
