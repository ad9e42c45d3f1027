# Config package for cascadeqa
from .settings import settings, Settings

__all__ = [
    "settings",
    "Settings",
]
