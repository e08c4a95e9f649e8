"""
Utility functions for configs, settings and reports
"""

from .helpers import (
    canonical_json,
    config_hash,
    create_run_manifest,
    load_function_csv,
    load_report,
    save_function_csv,
    save_report,
    to_jsonable,
)
from .settings import PROFILES, Settings, ToleranceProfile, get_profile, load_settings

__all__ = [
    'canonical_json',
    'config_hash',
    'create_run_manifest',
    'load_function_csv',
    'load_report',
    'save_function_csv',
    'save_report',
    'to_jsonable',
    'PROFILES',
    'Settings',
    'ToleranceProfile',
    'get_profile',
    'load_settings',
]
