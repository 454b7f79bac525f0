from .base.dif import DifConfig, Variant, dif_filter, dif_step  # noqa: F401
from .base.gaussian import Gaussian  # noqa: F401

__version__ = '0.1.0'
