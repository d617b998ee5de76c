#!/usr/bin/env python
"""Entry point for palmlab: `python manage.py palm_run --config acceptance.cfg`."""
import os
import sys


def main() -> None:
    os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")
    try:
        from django.core.management import execute_from_command_line
    except ImportError as exc:
        raise ImportError(
            "Couldn't import Django. Install the requirements (pip install -r requirements.txt) first."
        ) from exc
    execute_from_command_line(sys.argv)


if __name__ == "__main__":
    main()
