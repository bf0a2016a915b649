from .version import *
from .geometry import *
from .probability import *
from .optimizer import *
from .toa import *
from .aoa import *
from .joint import *
from .scene import *
from .simulation import *
from .evaluation import *
from .ingestion import *
from .records import *
from .workspace import *
from .locate import *
