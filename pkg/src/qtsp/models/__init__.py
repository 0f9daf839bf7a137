"""MILP, MIQP and CP formulations: exporters and in-process evaluation."""

from .assignment import (
    CheckReport,
    ConstraintViolation,
    MilpAssignment,
    assignment_from_tour,
    assignment_to_text,
    check_milp,
    check_miqp,
    eval_cp,
    eval_miqp_objective,
    parse_assignment,
    read_assignment,
)
from .cp import CpModel, export_cp, parse_cp
from .lp import LpModel, SUBTOUR_FORMS, export_milp, export_miqp, lp_values, parse_lp, write_lp
from .text import ModelText, VarInfo

__all__ = [
    "CheckReport",
    "ConstraintViolation",
    "CpModel",
    "LpModel",
    "MilpAssignment",
    "ModelText",
    "SUBTOUR_FORMS",
    "VarInfo",
    "assignment_from_tour",
    "assignment_to_text",
    "check_milp",
    "check_miqp",
    "eval_cp",
    "eval_miqp_objective",
    "export_cp",
    "export_milp",
    "export_miqp",
    "lp_values",
    "parse_assignment",
    "parse_cp",
    "parse_lp",
    "read_assignment",
    "write_lp",
]
