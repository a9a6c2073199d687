#!/usr/bin/env python3

import sys

from caterlab.main import main

if __name__ == "__main__":
    # exit code follows the error class: 2 parse/config, 3 domain, 4 contradiction, 5 numeric method
    sys.exit(main())
