"""Pydantic schemas for mesh documents and marked-element files (JSON, schema version 1)."""

from typing import Optional, Union

from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from hdr.core.constants import SCHEMA_VERSION
from hdr.core.enums import BoundaryMode

IndexPair = tuple[int, int]


class MarkSet(BaseModel):
    """Marked level-ℓ elements and level-ℓ 0-forms whose supports are marked, keyed by level."""

    model_config = ConfigDict(extra="forbid", populate_by_name=True)

    schema_version: int = Field(SCHEMA_VERSION, alias="schema")
    marked: dict[int, list[IndexPair]] = Field(default_factory=dict)
    marked_functions: dict[int, list[IndexPair]] = Field(default_factory=dict)

    @field_validator("schema_version")
    @classmethod
    def _known_schema(cls, value: int) -> int:
        if value != SCHEMA_VERSION:
            raise ValueError(f"unsupported schema version {value} (expected {SCHEMA_VERSION})")
        return value

    @field_validator("marked", "marked_functions")
    @classmethod
    def _non_negative_levels(cls, value: dict[int, list[IndexPair]]) -> dict[int, list[IndexPair]]:
        if any(level < 0 for level in value):
            raise ValueError("levels must be non-negative")
        return value

    @property
    def is_empty(self) -> bool:
        return not any(self.marked.values()) and not any(self.marked_functions.values())


class MeshDocument(MarkSet):
    """
    Refinement domains on [0,1]² over a uniform base mesh.

    - degree / base_intervals: one value for both directions or a pair.
    - levels: L, the number of refinement domains below Ω₀.
    - generators[ℓ]: level-ℓ 0-form indices whose supports make up Ω_{ℓ+1}.
    - refined_elements[ℓ]: explicit level-ℓ elements of Ω_{ℓ+1}; only written when
      Ω_{ℓ+1} is not the union of the generator supports.
    """

    degree: Union[int, IndexPair]
    base_intervals: Union[int, IndexPair]
    boundary_mode: BoundaryMode = BoundaryMode.HOMOGENEOUS
    levels: int = Field(0, ge=0)
    generators: list[list[IndexPair]] = Field(default_factory=list)
    refined_elements: Optional[list[list[IndexPair]]] = None

    @field_validator("degree", "base_intervals")
    @classmethod
    def _positive(cls, value: Union[int, IndexPair]) -> Union[int, IndexPair]:
        values = (value,) if isinstance(value, int) else value
        if any(v < 1 for v in values):
            raise ValueError("degree and base_intervals must be positive")
        return value

    @model_validator(mode="after")
    def _levels_match(self) -> "MeshDocument":
        if len(self.generators) > self.levels:
            raise ValueError(f"{len(self.generators)} generator levels for levels={self.levels}")
        if self.refined_elements is not None and len(self.refined_elements) != self.levels:
            raise ValueError(f"refined_elements has {len(self.refined_elements)} levels, expected {self.levels}")
        if self.refined_elements is None and len(self.generators) != self.levels:
            raise ValueError("generators must list every level when refined_elements is omitted")
        return self

    @property
    def degrees(self) -> IndexPair:
        return (self.degree, self.degree) if isinstance(self.degree, int) else tuple(self.degree)

    @property
    def intervals(self) -> IndexPair:
        if isinstance(self.base_intervals, int):
            return self.base_intervals, self.base_intervals
        return tuple(self.base_intervals)

    def marks(self) -> MarkSet:
        return MarkSet(marked=self.marked, marked_functions=self.marked_functions)
