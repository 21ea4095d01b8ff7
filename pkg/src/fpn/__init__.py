"""Flag-Proxy Network toolkit for degree-limited quantum error correction."""

from fpn.circuits import (
    Instruction,
    NoiseModel,
    NoisyCircuit,
    TwirlProbabilities,
    build_memory_circuit,
    circuit_from_text,
    circuit_to_text,
    load_circuit,
    save_circuit,
    twirl_probs,
)
from fpn.cli import ExperimentConfig, StageError, run_experiment, stage_seed
from fpn.codes import (
    Check,
    LogicalOperator,
    TannerCode,
    code_distance_bruteforce,
    gen_rotated_surface,
    gen_toric,
    gen_triangular_color,
    hyperbolic_family_check,
    load_code,
    save_code,
    validate_code,
)
from fpn.decoders import (
    CertificateResult,
    CorrectionResult,
    DecodingGraph,
    Matching,
    build_decoding_graph,
    certify_effective_distance,
    decode_flagged_mwpm,
    decode_flagged_restriction,
    decode_ml_oracle,
    make_ml_decoder,
    make_mwpm_decoder,
    make_restriction_decoder,
    mwpm_exact,
)
from fpn.dem import (
    DecodingHypergraph,
    EquivalenceClass,
    FaultSite,
    Hyperedge,
    build_equiv_classes,
    detector_marginals,
    enumerate_faults,
    extract_hypergraph,
    load_hypergraph,
    save_hypergraph,
    select_representative,
)
from fpn.layout import (
    FpnLayout,
    LayoutMetrics,
    assign_flags,
    build_fpn,
    build_naive_layout,
    insert_proxies,
    layout_metrics,
    load_layout,
    save_layout,
    share_flags,
)
from fpn.sampling import (
    BerResult,
    SyndromeBatch,
    compile_circuit,
    estimate_ber,
    load_batch,
    sample,
    save_batch,
    wilson_stderr,
)
from fpn.scheduling import (
    CnotSchedule,
    TimingModel,
    load_schedule,
    round_latency,
    save_schedule,
    schedule_code,
    schedule_fpn,
    solve_check,
    verify_schedule,
)
from fpn.tableau import run_circuit, verify_noiseless

__all__ = [
    "BerResult",
    "CertificateResult",
    "Check",
    "CnotSchedule",
    "CorrectionResult",
    "DecodingGraph",
    "DecodingHypergraph",
    "EquivalenceClass",
    "ExperimentConfig",
    "FaultSite",
    "FpnLayout",
    "Hyperedge",
    "Instruction",
    "LayoutMetrics",
    "LogicalOperator",
    "Matching",
    "NoiseModel",
    "NoisyCircuit",
    "StageError",
    "SyndromeBatch",
    "TannerCode",
    "TimingModel",
    "TwirlProbabilities",
    "assign_flags",
    "build_decoding_graph",
    "build_equiv_classes",
    "build_fpn",
    "build_memory_circuit",
    "build_naive_layout",
    "certify_effective_distance",
    "circuit_from_text",
    "circuit_to_text",
    "code_distance_bruteforce",
    "compile_circuit",
    "decode_flagged_mwpm",
    "decode_flagged_restriction",
    "decode_ml_oracle",
    "detector_marginals",
    "enumerate_faults",
    "estimate_ber",
    "extract_hypergraph",
    "gen_rotated_surface",
    "gen_toric",
    "gen_triangular_color",
    "hyperbolic_family_check",
    "insert_proxies",
    "layout_metrics",
    "load_batch",
    "load_circuit",
    "load_code",
    "load_hypergraph",
    "load_layout",
    "load_schedule",
    "make_ml_decoder",
    "make_mwpm_decoder",
    "make_restriction_decoder",
    "mwpm_exact",
    "round_latency",
    "run_circuit",
    "run_experiment",
    "sample",
    "save_batch",
    "save_circuit",
    "save_code",
    "save_hypergraph",
    "save_layout",
    "save_schedule",
    "schedule_code",
    "schedule_fpn",
    "select_representative",
    "share_flags",
    "solve_check",
    "stage_seed",
    "validate_code",
    "verify_noiseless",
    "verify_schedule",
    "wilson_stderr",
]

__version__ = "0.1.0"
