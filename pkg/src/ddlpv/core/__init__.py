"""Data-driven LPV representations built straight from measured dictionaries."""
from .types import (DISC_BOX, AffineMatrixFunction, ControllerGains, DataDictionary,
                    DataMatrices, PeReport, ScheduleBox, sched_kron)
from .representation import (COND_FLAG, DEFAULT_RANK_TOL, ClosedLoopMap, WindowInfo,
                             best_window, build_data_matrices, closed_loop_matrix,
                             consistency_matrix, dd_closed_loop_at, dd_closed_loop_map,
                             dd_open_loop_step, lifted_basis, lifted_state, lpv_step, pe_check,
                             projected_xnext, regressor, row_space_projector, window,
                             window_sweep)
from .scheduling import SchedulingMap, rescale_dictionary, rescale_scheduling
from .io import (dictionary_hash, read_dictionary, read_matrix_csv, write_dictionary,
                 write_matrix_csv)

__all__ = [
    "DISC_BOX", "AffineMatrixFunction", "ControllerGains", "DataDictionary", "DataMatrices",
    "PeReport", "ScheduleBox", "sched_kron", "COND_FLAG", "DEFAULT_RANK_TOL", "ClosedLoopMap",
    "WindowInfo", "best_window", "build_data_matrices", "closed_loop_matrix",
    "consistency_matrix", "dd_closed_loop_at", "dd_closed_loop_map", "dd_open_loop_step",
    "lifted_basis", "lifted_state", "lpv_step", "pe_check", "projected_xnext", "regressor",
    "row_space_projector", "window", "window_sweep", "SchedulingMap", "rescale_dictionary",
    "rescale_scheduling", "dictionary_hash", "read_dictionary", "read_matrix_csv",
    "write_dictionary", "write_matrix_csv",
]
