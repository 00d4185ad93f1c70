from django.apps import AppConfig


class FilltuneConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'filltune'
    verbose_name = 'Fill-tuning landscape toolkit'
