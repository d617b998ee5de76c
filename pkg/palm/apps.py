from django.apps import AppConfig


class PalmConfig(AppConfig):
    default_auto_field = "django.db.models.BigAutoField"
    name = "palm"
    verbose_name = "Palm kernels of superpositions"
