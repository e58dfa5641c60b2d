from enum import Enum, unique, EnumMeta


class CustomEnum(EnumMeta):
    def __contains__(cls, item):
        try:
            cls(item)
        except ValueError:
            return False
        else:
            return True


@unique
class Engine(Enum, metaclass=CustomEnum):
    """Feature extractor applied before detection
    """
    fdif = 'fdif'
    fracnn = 'fracnn'
    raw = 'raw'

    @classmethod
    def get_values(cls):
        return [v.value for v in cls.__members__.values()]


@unique
class Matcher(Enum, metaclass=CustomEnum):
    """Pixel correspondence used when counting true positives
    """
    optimal = 'optimal'
    greedy = 'greedy'

    @classmethod
    def get_values(cls):
        return [v.value for v in cls.__members__.values()]
