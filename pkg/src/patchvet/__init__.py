"""Rule-backed validation of mailing-list patch proposals."""

__version__ = "0.1.0"
