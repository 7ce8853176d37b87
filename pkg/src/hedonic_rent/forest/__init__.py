"""Random forest regression grown from scratch."""

from .forest import (
    ForestFit,
    ForestParams,
    RentForestRegressor,
    Tree,
    apply_forest,
    fit_forest,
    load_forest,
    predict_forest,
    save_forest,
    tree_outputs,
    variable_importance,
)

__all__ = [
    "ForestFit",
    "ForestParams",
    "RentForestRegressor",
    "Tree",
    "apply_forest",
    "fit_forest",
    "load_forest",
    "predict_forest",
    "save_forest",
    "tree_outputs",
    "variable_importance",
]
