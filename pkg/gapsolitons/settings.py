"""
Django settings for the gapsolitons project.

The numerical apps (spectral, physics, sparsifier, krylov, solver,
continuation) are plain libraries and never touch a database. The runs app
provides the ``solitons`` management command and a small read-only API.

Values come from the environment (or a ``.env`` file) through
python-decouple; see ``.env.example``.
"""

from pathlib import Path

from decouple import Csv, config

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


# SECURITY WARNING: keep the secret key used in production secret!
# The key only signs API responses; a development default keeps the CLI usable without a .env.
SECRET_KEY = config("SECRET_KEY", default="gapsolitons-development-key")

# SECURITY WARNING: don't run with debug turned on in production!
DEBUG = config("DEBUG", default=False, cast=bool)
ALLOWED_HOSTS = config("ALLOWED_HOSTS", default="localhost,127.0.0.1", cast=Csv())


# Application definition

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",

    # Third-party apps
    "rest_framework",

    "spectral",      # Periodic grids, spectral Laplacian, Green operator
    "physics",       # Lattice potentials and nonlinearities
    "sparsifier",    # Sparsifying preconditioner
    "krylov",        # Restarted GMRES
    "solver",        # Newton, bordered Newton, Petviashvili
    "continuation",  # Lambda sweeps
    "runs",          # CLI, presets, outputs, API
]

MIDDLEWARE = [
    "django.middleware.security.SecurityMiddleware",
    "django.middleware.common.CommonMiddleware",
]

ROOT_URLCONF = "gapsolitons.urls"

WSGI_APPLICATION = "gapsolitons.wsgi.application"


# No models are persisted; results go to files under SOLITONS_OUTPUT_DIR.
DATABASES = {}


# Internationalization

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True


# Rest Framework Configuration
REST_FRAMEWORK = {
    "DEFAULT_AUTHENTICATION_CLASSES": [],
    "DEFAULT_PERMISSION_CLASSES": [
        "rest_framework.permissions.AllowAny",
    ],
    "DEFAULT_RENDERER_CLASSES": [
        "rest_framework.renderers.JSONRenderer",
    ],
    "DEFAULT_PARSER_CLASSES": [
        "rest_framework.parsers.JSONParser",
    ],
    "UNAUTHENTICATED_USER": None,
}


# Solver defaults, read by the run-config serializers
SOLITONS = {
    "OUTPUT_DIR": config("SOLITONS_OUTPUT_DIR", default=str(BASE_DIR / "runs_output")),
    "STENCIL_B": config("SOLITONS_STENCIL_B", default=1, cast=int),
    "STENCIL_W": config("SOLITONS_STENCIL_W", default=3, cast=int),
    "ORDERING": config("SOLITONS_ORDERING", default="nested_dissection"),
    # 192x192 and 384x384 reproductions take minutes; opt in explicitly
    "EXTENDED_TESTS": config("SOLITONS_EXTENDED_TESTS", default=False, cast=bool),
}


# Logging
LOG_LEVEL = config("LOG_LEVEL", default="INFO")

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "solver": {
            "format": "{asctime} {levelname} {name} {message}",
            "style": "{",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "solver",
        },
    },
    "loggers": {
        app: {"handlers": ["console"], "level": LOG_LEVEL, "propagate": False}
        for app in ("spectral", "physics", "sparsifier", "krylov", "solver", "continuation", "runs")
    },
}
