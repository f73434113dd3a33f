"""The six value types of the mini-language."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class TfitType:
    def __str__(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class IntType(TfitType):
    def __str__(self) -> str:
        return "Int"


@dataclass(frozen=True)
class BoolType(TfitType):
    def __str__(self) -> str:
        return "Bool"


@dataclass(frozen=True)
class TensorType(TfitType):
    def __str__(self) -> str:
        return "Tensor"


@dataclass(frozen=True)
class ShapeType(TfitType):
    def __str__(self) -> str:
        return "Shape"


@dataclass(frozen=True)
class UnitType(TfitType):
    def __str__(self) -> str:
        return "()"


@dataclass(frozen=True)
class TupleType(TfitType):
    items: tuple[TfitType, ...]

    def __post_init__(self) -> None:
        if len(self.items) < 2:
            raise ValueError("tuple types need at least two components")

    def __str__(self) -> str:
        return "(" + ", ".join(str(t) for t in self.items) + ")"


INT = IntType()
BOOL = BoolType()
TENSOR = TensorType()
SHAPE = ShapeType()
UNIT = UnitType()

NAMED_TYPES = {"Int": INT, "Bool": BOOL, "Tensor": TENSOR, "Shape": SHAPE}
