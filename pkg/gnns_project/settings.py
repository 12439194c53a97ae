import os
from pathlib import Path
from dotenv import load_dotenv

load_dotenv()

BASE_DIR = Path(__file__).resolve().parent.parent


def _env_bool(name, default):
    return os.getenv(name, str(default)).lower() in ('true', '1', 'yes')


def _env_ints(name, default):
    return tuple(int(part) for part in os.getenv(name, default).split(',') if part.strip())


SECRET_KEY = os.getenv('SECRET_KEY', 'django-insecure-dev-key-gnns-community-detection')
DEBUG = _env_bool('DEBUG', True)
ALLOWED_HOSTS = []

INSTALLED_APPS = [
    'core',
]

DATABASE_URL = os.getenv('DATABASE_URL', '')
if DATABASE_URL and DATABASE_URL.startswith('postgres'):
    import dj_database_url
    DATABASES = {'default': dj_database_url.parse(DATABASE_URL)}
else:
    DATABASES = {
        'default': {
            'ENGINE': 'django.db.backends.sqlite3',
            'NAME': BASE_DIR / 'gnns_runs.db',
        }
    }

LANGUAGE_CODE = 'en-us'
TIME_ZONE = 'UTC'
USE_I18N = False
USE_TZ = True

DEFAULT_AUTO_FIELD = 'django.db.models.BigAutoField'

# Engine defaults; command-line flags always take precedence
GNNS_DEFAULT_SAMPLES = int(os.getenv('GNNS_DEFAULT_SAMPLES', '100'))
GNNS_STAGE_ITERS = _env_ints('GNNS_STAGE_ITERS', '10,10,30')
GNNS_MAX_COMMUNITIES = int(os.getenv('GNNS_MAX_COMMUNITIES', '32'))
GNNS_FINE_TUNE_ITERS = int(os.getenv('GNNS_FINE_TUNE_ITERS', '20'))
GNNS_LOUVAIN_ATTEMPTS = int(os.getenv('GNNS_LOUVAIN_ATTEMPTS', '20'))
GNNS_N_JOBS = int(os.getenv('GNNS_N_JOBS', '1'))
GNNS_OUTPUT_DIR = os.getenv('GNNS_OUTPUT_DIR', str(BASE_DIR / 'exports'))
GNNS_RECORD_RUNS = _env_bool('GNNS_RECORD_RUNS', True)
GNNS_LOG_LEVEL = os.getenv('GNNS_LOG_LEVEL', 'INFO').upper()
GNNS_RUN_SLOW_TESTS = _env_bool('GNNS_RUN_SLOW_TESTS', False)
GNNS_DATASETS_DIR = BASE_DIR / 'datasets'

LOGGING = {
    'version': 1,
    'disable_existing_loggers': False,
    'formatters': {
        'standard': {'format': '%(asctime)s %(levelname)s %(name)s: %(message)s'},
    },
    'handlers': {
        'console': {'class': 'logging.StreamHandler', 'formatter': 'standard'},
    },
    'loggers': {
        'services': {'handlers': ['console'], 'level': GNNS_LOG_LEVEL, 'propagate': False},
        'core': {'handlers': ['console'], 'level': GNNS_LOG_LEVEL, 'propagate': False},
    },
}
