from django.apps import AppConfig


class ContinuationConfig(AppConfig):
    name = "continuation"
