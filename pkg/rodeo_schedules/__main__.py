import sys

from rodeo_schedules.cli import main

sys.exit(main())
