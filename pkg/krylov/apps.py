from django.apps import AppConfig


class KrylovConfig(AppConfig):
    name = "krylov"
