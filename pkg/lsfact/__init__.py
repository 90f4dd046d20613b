from __future__ import annotations

from .errors import *
from .config import *
from .helpers import *
from .lorentz import *
from .matrix import *
from .schatten import *
from .nuclear import *
from .chain import *
from .spectral import *
from .experiments import *
