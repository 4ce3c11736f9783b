"""Small semidefinite-programming layer: variables, affine matrix expressions,
LMI/equality constraints and pluggable interior-point back ends."""
from .expr import AffineMatrixExpr, MatrixVariable, as_expr, bmat, kron_eye, trace
from .program import (FEAS_TOL, GAP_TOL, ConicProgram, Solution, equality_residuals,
                      lmi_residuals, solve)
from .adapters import available_adapters, get_adapter
from .interchange import dump_program, load_program, program_from_dict, program_to_dict
from .vec import smat, svec

__all__ = [
    "AffineMatrixExpr", "MatrixVariable", "as_expr", "bmat", "kron_eye", "trace", "FEAS_TOL",
    "GAP_TOL", "ConicProgram", "Solution", "equality_residuals", "lmi_residuals", "solve",
    "available_adapters", "get_adapter", "dump_program", "load_program", "program_from_dict",
    "program_to_dict", "smat", "svec",
]
