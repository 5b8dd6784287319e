from django.apps import AppConfig


class PhysicsConfig(AppConfig):
    name = "physics"
    verbose_name = "Lattice potentials and nonlinearities"
