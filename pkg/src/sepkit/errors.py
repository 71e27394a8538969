"""Exception hierarchy shared across the toolkit."""


class SepkitError(Exception):
    """Base class for all toolkit errors."""


class ValidationError(SepkitError, ValueError):
    """Arguments violate an operation's preconditions."""


class DataFormatError(SepkitError):
    """A data file (CSV) is malformed or empty."""


class NumericalError(SepkitError):
    """A numerical guard tripped: covariance not PSD, singular solve,
    whitening eigenvalue below the floor, or zero-vector sphere projection."""


class EmptyEnsembleError(SepkitError):
    """Node filtering rejected every candidate cluster.

    Carries the rejection report: a list of (cluster_id, threshold) pairs
    for the dropped candidates.
    """

    def __init__(self, rejected):
        self.rejected = list(rejected)
        detail = ", ".join(f"cluster {cid}: c={c:.6g}" for cid, c in self.rejected)
        super().__init__(f"no nodes retained ({detail})")


class ModelFormatError(SepkitError):
    """A serialized model file fails schema or version checks."""
