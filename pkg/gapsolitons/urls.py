"""
URL configuration for the gapsolitons project.

Only the runs app exposes HTTP routes; the numerical apps are libraries
used by the ``solitons`` management command.
"""

from django.urls import include, path

urlpatterns = [
    # Preset table and config validation
    # Namespace 'runs' for reverse lookups: runs:preset-list, runs:config-validate
    path("runs/", include(("runs.urls", "runs"), namespace="runs")),
]
