"""Numerical toolkit for integrable geodesic flows on Lie groups and their quotients."""
from importlib.metadata import PackageNotFoundError, version

try:
    __version__ = version("artifact")
except PackageNotFoundError:  # running from a source tree
    __version__ = "0.1.0"
