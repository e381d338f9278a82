class ForgeryError(ValueError):
    """A forgery cannot be produced for the given inputs."""


class TemplateError(ValueError):
    """A compound-figure template is malformed or nothing fits."""
