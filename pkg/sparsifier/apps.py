from django.apps import AppConfig


class SparsifierConfig(AppConfig):
    name = "sparsifier"
