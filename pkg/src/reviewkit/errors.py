"""Base error type shared by all reviewkit modules."""


class ReviewKitError(Exception):
    """Base class for domain errors.

    ``http_status`` is the status code the HTTP layer maps the error to;
    subclasses override it where 400 is not appropriate.
    """

    http_status = 400
