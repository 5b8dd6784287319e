# runs/apps.py
from django.apps import AppConfig


class RunsConfig(AppConfig):
    name = "runs"
    verbose_name = "Solver runs, presets and outputs"
