"""
WSGI entry point for the gapsolitons project.

Serves the read-only runs API (presets and config validation). Solver
runs themselves go through ``manage.py solitons``.
"""

import os

from django.core.wsgi import get_wsgi_application

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "gapsolitons.settings")

application = get_wsgi_application()
