from pathlib import Path

from click import ClickException

from fracfilter._format import comma_separated


class InvalidArgumentError(ClickException, ValueError):
    """Raised when a function receives an argument outside its domain
    (e.g., an even kernel side or a negative radius)
    """
    exit_code = 1


class ShapeMismatchError(InvalidArgumentError):
    """Raised when two grids that must share a shape do not
    """

    def __init__(self, *shapes, what='grids'):
        shapes_ = ', '.join(str(tuple(s)) for s in shapes)
        super().__init__(f'Expected {what} with the same shape, '
                         f'got: {shapes_}')


class ConfigurationError(ClickException):
    """
    Raised when there is a misconfiguration. Captured by the CLI to only
    show the error message and not the whole traceback
    """
    exit_code = 1


class ConfigurationFileTypeError(ConfigurationError):
    """Raised if the configuration file does not have the right type
    """

    def __init__(self, path, data):
        super().__init__(f'Expected {str(path)!r} to contain a dictionary '
                         f'but got an object of type: {type(data).__name__}')


class DataError(ClickException):
    """Base class for problems with input data (as opposed to usage errors)
    """
    exit_code = 2


class ImageReadError(DataError):
    """Raised when an image cannot be read or has an unsupported format
    """

    def __init__(self, path, reason):
        self.path = Path(path)
        super().__init__(f'Cannot read image {str(path)!r}: {reason}')


class InsufficientClassError(DataError):
    """Raised when there are not enough pixels of a class to sample from
    """

    def __init__(self, label, available, requested):
        self.label = label
        super().__init__(f'Not enough {label} pixels to sample from: '
                         f'requested {requested}, available {available}')


class ModelFormatError(DataError):
    """Raised when a serialized logistic model cannot be parsed
    """

    def __init__(self, path, reason):
        super().__init__(f'Invalid model file {str(path)!r}: {reason}')


class UnpairedFilesError(DataError):
    """Raised when files in two directories cannot be paired by stem
    """

    def __init__(self, orphans):
        self.orphans = sorted(str(o) for o in orphans)
        super().__init__('Some files do not have a counterpart with the '
                         'same name in the other directory: '
                         f'{comma_separated(self.orphans)}')


class DuplicateNameError(DataError):
    """Raised when different files would map to the same name
    """

    def __init__(self, paths):
        self.paths = sorted(str(p) for p in paths)
        super().__init__('Some files map to the same name and would '
                         f'overwrite each other: {comma_separated(self.paths)}')
