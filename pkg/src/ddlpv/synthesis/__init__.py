"""Data-driven synthesis of gain-scheduled state feedback."""
from .weights import DISC_L2_WEIGHTS, DISC_QP_WEIGHTS, L2Weights, QuadraticWeights
from .structure import Dims, fq_to_F, outer_factors
from .programs import SynthesisProgram, build_l2_program, build_program, build_qp_program
from .result import Multiplier, SynthesisResult
from .verify import CertificateReport, ClosedLoopCertificate, certify_closed_loop, verify_certificate
from .synthesize import recover_gains, synthesize

__all__ = [
    "DISC_L2_WEIGHTS", "DISC_QP_WEIGHTS", "L2Weights", "QuadraticWeights", "Dims", "fq_to_F",
    "outer_factors", "SynthesisProgram", "build_l2_program", "build_program", "build_qp_program",
    "Multiplier", "SynthesisResult", "CertificateReport", "ClosedLoopCertificate",
    "certify_closed_loop", "verify_certificate", "recover_gains", "synthesize",
]
