import os
from pathlib import Path

from dotenv import load_dotenv


# Load local environment variables from .env if present
load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent

SECRET_KEY = os.environ.get("DJANGO_SECRET_KEY", "dev-secret-key-change-me")
DEBUG = os.environ.get("DJANGO_DEBUG", "True").lower() in {"1", "true", "yes"}

ALLOWED_HOSTS: list[str] = []

INSTALLED_APPS = [
    "django.contrib.contenttypes",
    "django.contrib.auth",
    # Third-party
    "rest_framework",
    # Local apps
    "patterns",
    "processes",
    "palm",
    "verify",
    "experiments",
]

# No persistence: experiment results go to CSV only.
DATABASES: dict = {}

LANGUAGE_CODE = "en-us"
TIME_ZONE = os.environ.get("TIME_ZONE", "UTC")
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = "django.db.models.BigAutoField"

# Celery (defaults are set in config/celery.py)
CELERY_TASK_SOFT_TIME_LIMIT = int(os.environ.get("CELERY_TASK_SOFT_TIME_LIMIT", "3600"))
CELERY_TASK_TIME_LIMIT = int(os.environ.get("CELERY_TASK_TIME_LIMIT", "7200"))

# Monte Carlo engine
PALM_THREADS = max(1, int(os.environ.get("PALM_THREADS", "1")))
# Replicates per derived RNG stream; fixed so results never depend on thread count
PALM_REPLICATE_BLOCK = int(os.environ.get("PALM_REPLICATE_BLOCK", "512"))

# Verification defaults (overridable per experiment in the config file)
PALM_EPSILON = float(os.environ.get("PALM_EPSILON", "0.02"))
PALM_T_STEP = float(os.environ.get("PALM_T_STEP", "1e-3"))
PALM_Z_CRIT = float(os.environ.get("PALM_Z_CRIT", "4.0"))
PALM_QUADRATURE_NODES_PER_AXIS = int(os.environ.get("PALM_QUADRATURE_NODES_PER_AXIS", "64"))
PALM_QUADRATURE_MAX_NODES = int(os.environ.get("PALM_QUADRATURE_MAX_NODES", "4096"))
PALM_PMF_TAIL_MASS = float(os.environ.get("PALM_PMF_TAIL_MASS", "1e-9"))
# Thomas parents are simulated on the window dilated by this many sigmas
PALM_THOMAS_DILATION = float(os.environ.get("PALM_THOMAS_DILATION", "4.0"))

# Results
PALM_OUTPUT = os.environ.get("PALM_OUTPUT", "results.csv")
# Wall-clock seconds make the CSV non-reproducible, so they are opt-in
PALM_RECORD_TIMINGS = os.environ.get("PALM_RECORD_TIMINGS", "false").lower() in {"1", "true", "yes"}

# Logging (basic)
LOGGING = {
    "version": 1,
    "disable_existing_loggers": False,
    "formatters": {
        "simple": {"format": "%(asctime)s %(levelname)s %(name)s: %(message)s"}
    },
    "handlers": {
        "console": {"class": "logging.StreamHandler", "formatter": "simple"}
    },
    "root": {"handlers": ["console"], "level": os.environ.get("PALM_LOG_LEVEL", "INFO")},
}
