"""Exception hierarchy shared by every stage of the pipeline."""


class SledError(Exception):
    """Base class for all pipeline errors."""


class ImageReadError(SledError, OSError):
    """The image file could not be opened."""


class DecodeError(SledError, ValueError):
    """The file exists but is not a decodable 8-bit raster."""


class DegenerateImage(SledError, ValueError):
    """The image cannot support the requested operation."""


class EmptySuperpixel(SledError, ValueError):
    """A superpixel id in ``[0, N)`` owns no pixels."""


class DisconnectedNode(SledError):
    """One or more graph nodes ended up without incident edges."""

    def __init__(self, nodes):
        self.nodes = list(nodes)
        super().__init__(f"{len(self.nodes)} node(s) without edges: {self.nodes[:10]}")


class EmptyGraph(SledError, ValueError):
    """The graph has no edges, so its volume is zero."""


class SingleRegion(SledError, ValueError):
    """Bisection needs at least two regions."""


class TooFewSamples(SledError, ValueError):
    """Not enough training points for an isolation forest."""


class AllScalesDegenerate(SledError):
    """Every scale of a multi-scale run was degenerate."""


class DegenerateHistogram(SledError, ValueError):
    """Fewer than two occupied histogram bins."""


class EmptyMask(SledError):
    """The mask contains no foreground component."""


class DimensionMismatch(SledError, ValueError):
    """Two masks or images differ in shape."""


class ConfigError(SledError, ValueError):
    """Invalid pipeline configuration."""
