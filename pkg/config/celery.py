import os

from celery import Celery


os.environ.setdefault("DJANGO_SETTINGS_MODULE", "config.settings")

TRUTHY = {"1", "true", "yes"}


def broker_url(env=os.environ) -> str:
    """CELERY_BROKER_URL, then REDIS_URL; in-memory when neither is set."""
    return env.get("CELERY_BROKER_URL") or env.get("REDIS_URL") or "memory://"


def always_eager(broker: str, env=os.environ) -> bool:
    """Suites run in-process unless a real broker is configured or CELERY_TASK_ALWAYS_EAGER says otherwise."""
    flag = env.get("CELERY_TASK_ALWAYS_EAGER")
    if flag is not None:
        return flag.lower() in TRUTHY
    return broker.startswith("memory://")


app = Celery("palmlab")
app.conf.broker_url = broker_url()
app.conf.task_always_eager = always_eager(app.conf.broker_url)
# Suites return a small JSON summary; rows live in the CSV
app.conf.task_serializer = "json"
app.conf.result_serializer = "json"
app.conf.task_routes = {"experiments.run_suite": {"queue": os.environ.get("PALM_CELERY_QUEUE", "palm")}}

app.config_from_object("django.conf:settings", namespace="CELERY")
app.autodiscover_tasks()
