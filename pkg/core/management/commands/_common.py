"""Shared helpers for the community detection management commands."""
import os
from contextlib import contextmanager

from django.core.management.base import CommandError

from services.errors import CommunityDetectionError, ConfigError, UnsupportedGraphError

EXIT_CONFIG_ERROR = 1
EXIT_DATA_ERROR = 2

CONFIG_ERRORS = (ConfigError, UnsupportedGraphError)


@contextmanager
def exit_codes():
    """Turn service errors into CommandError with the matching exit status."""
    try:
        yield
    except CONFIG_ERRORS as e:
        raise CommandError(str(e), returncode=EXIT_CONFIG_ERROR) from e
    except (CommunityDetectionError, OSError) as e:
        raise CommandError(str(e), returncode=EXIT_DATA_ERROR) from e


def comma_list(text):
    return [part.strip() for part in (text or '').split(',') if part.strip()]


def comma_ints(text):
    try:
        return [int(part) for part in comma_list(text)]
    except ValueError:
        raise ConfigError(f"Expected comma-separated integers, got '{text}'") from None


def dataset_name(path):
    return os.path.splitext(os.path.basename(path))[0]


def add_engine_arguments(parser):
    parser.add_argument('--samples', type=int, default=None, help='GNNS population size S')
    parser.add_argument('--max-communities', type=int, default=None, help='Community cap m')
    parser.add_argument('--seed', type=int, default=None, help='Random seed')
    parser.add_argument('--n-jobs', type=int, default=None, help='Worker threads')
    parser.add_argument('--out', default=None, help='Output directory')
    parser.add_argument('--no-record', action='store_true', help='Do not store the run in the database')
