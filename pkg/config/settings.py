"""
Django settings for the NeuHash-CF project.

The project has no web surface: Django provides settings, logging, the ORM
(pipeline runs and metric records) and the management-command CLI.
Values come from the environment or a `.env` file through python-decouple.
"""
from decouple import config, Csv

from pathlib import Path

# Build paths inside the project like this: BASE_DIR / 'subdir'.
BASE_DIR = Path(__file__).resolve().parent.parent


SECRET_KEY = config('SECRET_KEY', default='neuhash-cf-local')

DEBUG = config('DEBUG', default=False, cast=bool)
ALLOWED_HOSTS = config('ALLOWED_HOSTS', default='localhost,127.0.0.1', cast=Csv())


# Application definition

INSTALLED_APPS = [
    'django.contrib.contenttypes',
    'django.contrib.auth',
    'rest_framework',
    'corpus',
    'neuhash',
    'training',
    'hashindex',
    'evaluation',
    'pipeline',
]

MIDDLEWARE = []


# Database
# https://docs.djangoproject.com/en/5.2/ref/settings/#databases
# sqlite by default; set DB_ENGINE=django.db.backends.postgresql for a shared run log.

DB_ENGINE = config('DB_ENGINE', default='django.db.backends.sqlite3')

if DB_ENGINE.endswith('sqlite3'):
    DATABASES = {
        'default': {
            'ENGINE': DB_ENGINE,
            'NAME': BASE_DIR / config('DB_NAME', default='neuhash.sqlite3'),
        }
    }
else:
    DATABASES = {
        'default': {
            'ENGINE': DB_ENGINE,
            'NAME': config('DB_NAME'),
            'USER': config('DB_USER'),
            'PASSWORD': config('DB_PASSWORD'),
            'HOST': config('DB_HOST', default='localhost'),
            'PORT': config('DB_PORT', default='5432'),
        }
    }

REST_FRAMEWORK = {
    ## Only the serializers are used (config validation); no views are routed
    'UNAUTHENTICATED_USER': None,
}


# Internationalization

LANGUAGE_CODE = 'en-us'

TIME_ZONE = 'UTC'

USE_I18N = False

USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'


# NeuHash-CF

NEUHASH = {
    'ARTIFACT_ROOT': BASE_DIR / config('NEUHASH_ARTIFACT_ROOT', default='artifacts'),
    # bytes the benchmark may allocate for codes and vectors
    'BENCH_MEMORY_BUDGET': config('NEUHASH_BENCH_MEMORY_BUDGET', default=4 * 1024 ** 3, cast=int),
    'STOPWORDS_PATH': BASE_DIR / 'corpus' / 'stopwords.txt',
    # rows per chunk when encoding items/users for a CodeBook
    'INFER_CHUNK': config('NEUHASH_INFER_CHUNK', default=4096, cast=int),
}


# Logging

LOG_LEVEL = config('NEUHASH_LOG_LEVEL', default='INFO')

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'verbose': {
            'format': '{asctime} {levelname} {name}: {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'verbose',
        },
    },
    'root': {
        'handlers': ['console'],
        'level': 'WARNING',
    },
    'loggers': {
        name: {'handlers': ['console'], 'level': LOG_LEVEL, 'propagate': False}
        for name in ['corpus', 'neuhash', 'training', 'hashindex', 'evaluation', 'pipeline']
    },
}
