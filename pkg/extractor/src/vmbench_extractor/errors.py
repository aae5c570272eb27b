class ExtractorError(Exception):
    """Base for everything this package raises on purpose."""


class DecodeError(ExtractorError):
    """Video unreadable, or sampling left fewer than two frames."""


class BackendUnavailable(ExtractorError):
    """A named perception backend is not registered in this build."""

    def __init__(self, role: str, name: str, available: tuple[str, ...]):
        self.role = role
        self.name = name
        self.available = available
        super().__init__(
            f"{role} backend {name!r} unavailable; registered: {', '.join(available) or 'none'}"
        )
