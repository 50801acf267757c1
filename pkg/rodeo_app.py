import sys

from rodeo_schedules.cli import main


if __name__ == "__main__":
    sys.exit(main())
