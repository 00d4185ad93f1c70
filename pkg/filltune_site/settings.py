"""
Django settings for the filltune project.
Fill-tuning landscape toolkit: command-line only, no HTTP surface.
"""

from pathlib import Path
from dotenv import load_dotenv
import os

BASE_DIR = Path(__file__).resolve().parent.parent

# Load environment variables from .env file
load_dotenv(BASE_DIR / '.env')

# Nothing is signed; Django only needs a value to be present
SECRET_KEY = os.environ.get('SECRET_KEY', 'filltune-cli-only')

DEBUG = os.environ.get('DEBUG', 'False').lower() in ('true', '1', 'yes')

ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'filltune',
]

# The pipeline persists artifacts as files; no database is used
DATABASES = {}

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

USE_TZ = True
TIME_ZONE = 'UTC'

# ============ FILL-TUNING DEFAULTS ============
# Process-level defaults; command-line flags take precedence

FILLTUNE_WORKERS = int(os.environ.get('FILLTUNE_WORKERS', 1))
FILLTUNE_OUTPUT_DIR = os.environ.get('FILLTUNE_OUTPUT_DIR', 'filltune-out')
FILLTUNE_LOG_LEVEL = os.environ.get('FILLTUNE_LOG_LEVEL', 'INFO').upper()

# ============ LOGGING ============

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'plain': {
            'format': '{asctime} {levelname} {name} {message}',
            'style': '{',
        },
    },
    'handlers': {
        'console': {
            'class': 'logging.StreamHandler',
            'formatter': 'plain',
        },
    },
    'loggers': {
        'filltune': {
            'handlers': ['console'],
            'level': FILLTUNE_LOG_LEVEL,
            'propagate': False,
        },
    },
}
