"""Structured error type shared by every module."""


class SyskitError(Exception):
    """An error with a stable machine-readable code (e.g. ``FOREST``)."""

    def __init__(self, code, message=""):
        super().__init__(f"{code}: {message}" if message else code)
        self.code = code
        self.message = message

    def as_dict(self):
        return {"error": {"code": self.code, "message": self.message}}
