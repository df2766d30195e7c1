from django.apps import AppConfig


class NeuhashConfig(AppConfig):
    default_auto_field = 'django.db.models.BigAutoField'
    name = 'neuhash'
