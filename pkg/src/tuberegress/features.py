"""Derived housing features and feature-subset selection."""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .dataset import RAW_FEATURES, Dataset
from .errors import MissingSourceColumn, UnknownFeature


@dataclass(frozen=True)
class FeatureRecipe:
    name: str
    inputs: tuple
    formula: object  # callable(**columns) -> array
    denominators: tuple = ()  # input names appearing as "x + 1" denominators


def _recipes():
    return (
        FeatureRecipe("Income_per_Room", ("MedInc", "AveRooms"),
                      lambda MedInc, AveRooms: MedInc / (AveRooms + 1), ("AveRooms",)),
        FeatureRecipe("Room_Value_Score", ("MedInc", "AveRooms"),
                      lambda MedInc, AveRooms: MedInc * AveRooms),
        FeatureRecipe("Location_Score", ("Latitude", "Longitude"),
                      lambda Latitude, Longitude: (Latitude * Longitude) / 1000),
        FeatureRecipe("Coastal_Proximity", ("Latitude",),
                      lambda Latitude: np.abs(Latitude - 34.05)),
        FeatureRecipe("Bedroom_Ratio", ("AveBedrms", "AveRooms"),
                      lambda AveBedrms, AveRooms: AveBedrms / (AveRooms + 1), ("AveRooms",)),
        FeatureRecipe("Population_Density", ("Population", "AveOccup"),
                      lambda Population, AveOccup: Population / (AveOccup + 1), ("AveOccup",)),
        FeatureRecipe("Age_Income_Interaction", ("HouseAge", "MedInc"),
                      lambda HouseAge, MedInc: HouseAge * MedInc),
        FeatureRecipe("Modernization_Score", ("MedInc", "HouseAge"),
                      lambda MedInc, HouseAge: MedInc / (HouseAge + 1), ("HouseAge",)),
        FeatureRecipe("Rooms_per_Person", ("AveRooms", "AveOccup"),
                      lambda AveRooms, AveOccup: AveRooms / (AveOccup + 1), ("AveOccup",)),
        FeatureRecipe("Income_Density", ("MedInc", "Population"),
                      lambda MedInc, Population: (MedInc * Population) / 1000),
    )


RECIPES = _recipes()
DERIVED_FEATURES = tuple(r.name for r in RECIPES)
ENGINEERED_FEATURES = RAW_FEATURES + DERIVED_FEATURES


def derive_features(ds: Dataset) -> Dataset:
    """Append the ten derived columns after the eight raw ones.

    Formulas are applied verbatim; a ``RuntimeWarning`` is emitted when an
    ``x + 1`` denominator is <= 0 (only possible outside the census domain).
    """
    for name in RAW_FEATURES:
        if name not in ds.columns:
            raise MissingSourceColumn(name)
    src = {name: ds.column(name) for name in RAW_FEATURES}
    new_cols = []
    with np.errstate(divide="ignore", invalid="ignore"):
        for r in RECIPES:
            for den in r.denominators:
                if np.any(src[den] + 1 <= 0):
                    warnings.warn(f"{r.name}: denominator {den} + 1 is <= 0 for some rows", RuntimeWarning)
            new_cols.append(r.formula(**{k: src[k] for k in r.inputs}))
    X = np.column_stack([ds.X] + new_cols)
    return ds.with_columns(ds.columns + DERIVED_FEATURES, X, f"{ds.provenance} | derive_features")


def select_features(ds: Dataset, feature_set) -> Dataset:
    """Restrict and reorder columns to ``feature_set``."""
    names = tuple(feature_set)
    if not names:
        raise UnknownFeature("<empty feature set>")
    for name in names:
        if name not in ds.columns:
            raise UnknownFeature(name)
    idx = [ds.columns.index(n) for n in names]
    if names == ds.columns:
        return ds
    return ds.with_columns(names, ds.X[:, idx])
