__version__ = '0.2.0'

from .errors import *
from .logger import *
from .corpus import *
from .topics import *
from .kb import *
from .kgraph import *
from .wire import *
from .chaoskey import *
from .cipher import *
from .channel import *
from .recovery import *
from .adversary import *
from .metrics import *
from .config import *
from .harness import *
