from .flat import FormatError
from .interp import IOState, StmtEffect, interpret_stmt
from .model import (
    DetourTable, DuplicateDetour, Patch, UnknownStmtId, UnpatchableLocation, build_detours,
    default_seed_patches, deserialize_patch, flat_digest, is_well_bounded, patch_findings,
    serialize_patch,
)

__all__ = [
    "DetourTable", "DuplicateDetour", "FormatError", "IOState", "Patch", "StmtEffect",
    "UnknownStmtId", "UnpatchableLocation", "build_detours", "default_seed_patches",
    "deserialize_patch", "flat_digest", "interpret_stmt", "is_well_bounded", "patch_findings",
    "serialize_patch",
]
