class GeneralException(Exception):
    """
    Base of every error raised by the lab. Subpackages declare their own
    subclasses next to the code that raises them.
    """

    def __init__(self, message):
        super().__init__(message)


class ShapeMismatchException(GeneralException):
    """
    Raised when an array does not have the shape an operation requires.
    """
    pass
