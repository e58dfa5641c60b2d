from fracfilter.commons import filters, parallel
from fracfilter.commons.image import as_image, check_same_shape, check_odd

__all__ = [
    'filters',
    'parallel',
    'as_image',
    'check_same_shape',
    'check_odd',
]
