"""
Django settings for the survchart project.

The project has no database models or web views: Django provides the
command framework, configuration and the test runner.
"""

from pathlib import Path
import math
import os
from dotenv import load_dotenv

# Load environment variables from .env file
load_dotenv()

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.getenv("SURVCHART_SECRET_KEY", "survchart-local-only")

DEBUG = os.getenv("SURVCHART_DEBUG", "0") == "1"

ALLOWED_HOSTS = []


# Application definition

INSTALLED_APPS = [
    "monitoring",
]

DATABASES = {}

LANGUAGE_CODE = "en-us"

TIME_ZONE = "UTC"

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"


# Worker count for simulations and chart construction (--workers default)
SURVCHART_WORKERS = int(os.getenv("SURVCHART_WORKERS") or os.cpu_count() or 1)

SURVCHART_LOG_LEVEL = os.getenv("SURVCHART_LOG_LEVEL", "INFO").upper()

# Chart defaults
SURVCHART_DEFAULTS = {
    "theta": math.log(2),
    "alpha": 0.05,
    "maxtheta": 6.0,
    "h_precision": 2,
    "conflevs": (0.95, 0.99),
    # CGR control limits from this many units or fewer are flagged as unreliable
    "cgr_low_n_sim": 20,
}


# Logging

LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {
            "format": "%(asctime)s %(levelname)s %(name)s: %(message)s",
        },
    },
    "handlers": {
        "console": {
            "class": "logging.StreamHandler",
            "formatter": "simple",
        },
    },
    "loggers": {
        "monitoring": {
            "handlers": ["console"],
            "level": SURVCHART_LOG_LEVEL,
            "propagate": False,
        },
    },
}
