"""Configure Django before pytest collects the app test modules, as ``manage.py test`` would."""
import os

import django
from django.test.utils import setup_test_environment

os.environ.setdefault("DJANGO_SETTINGS_MODULE", "gapsolitons.settings")
django.setup()
setup_test_environment()
