"""Exception types raised across the package."""

import numpy as np


class HedonicError(Exception):
    """Base class for all package errors."""


class ListingFileNotFoundError(HedonicError, FileNotFoundError):
    pass


class MissingColumnError(HedonicError, KeyError):
    def __init__(self, columns, where="input"):
        self.columns = list(columns)
        super().__init__(f"missing required column(s) in {where}: {', '.join(self.columns)}")

    def __str__(self):
        return self.args[0]


class NoValidRowsError(HedonicError, ValueError):
    pass


class EmptyTableError(HedonicError, ValueError):
    pass


class NetworkError(HedonicError, ValueError):
    pass


class DanglingEdgeError(NetworkError):
    def __init__(self, node_id):
        self.node_id = node_id
        super().__init__(f"edge references unknown node id {node_id}")


class FeatureSpecError(HedonicError, ValueError):
    pass


class RankDeficiencyError(HedonicError, np.linalg.LinAlgError):
    def __init__(self, columns):
        self.columns = list(columns)
        super().__init__(
            "design matrix is rank deficient; offending column(s): " + ", ".join(self.columns)
        )


class ColumnMismatchError(HedonicError, ValueError):
    pass


class DegenerateInputError(HedonicError, ValueError):
    """Input admits no meaningful result (zero variance, too few rows, ...)."""
