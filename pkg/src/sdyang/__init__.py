"""Self-dual Yang-Mills fields on Hermitian four-manifolds.

Symbolic expressions, jet-carrying lattice fields, Hermitian geometry,
Yang and K-matrix residuals, the Backlund transform, the heavenly map and a
checksummed catalog of test backgrounds.
"""

__version__ = "0.1.0"

from .fieldcore import ChartBox, Field, lattice  # noqa: E402
from .geometry import HermitianMetric, MetricSpec, flat_metric  # noqa: E402
from .gauge import yang_residual, kmatrix_residual  # noqa: E402
from .backlund import TransformConfig, transform, orbit, obstruction_probe  # noqa: E402
from .catalog import default_catalog, get  # noqa: E402

__all__ = ["ChartBox", "Field", "lattice", "HermitianMetric", "MetricSpec", "flat_metric",
           "yang_residual", "kmatrix_residual", "TransformConfig", "transform", "orbit",
           "obstruction_probe", "default_catalog", "get", "__version__"]
