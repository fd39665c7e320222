from .parallel import parallel_map
from .rng import derive_seed, substream

# formatters and plots import the analysis packages, which import this package;
# load them as utils.formatters / utils.plots
__all__ = ["parallel_map", "derive_seed", "substream"]
