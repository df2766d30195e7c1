from django.apps import AppConfig


class HashindexConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'hashindex'
