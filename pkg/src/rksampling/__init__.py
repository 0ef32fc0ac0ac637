"""Random sampling and iterative reconstruction in a reproducing-kernel
subspace of mixed-norm function spaces, at desk scale.

Subpackages:
    mixed_norms        sequence/grid mixed norms and norm-comparison checks
    kernel_space       tent generator, lattice kernel, projector, functionals
    sampling_analysis  random samples, theory constants, bound evaluators
    reconstruction     partition of unity, quasi-interpolant, iteration
    cli                reproducible experiment driver
"""

from .mixed_norms import (
    Cube,
    Exponents,
    Grid,
    GridSignal,
    SampleMatrix,
    grid_mixed_norm,
    holder_conjugate,
    norm_comparison_check,
    seq_mixed_norm,
)
from .kernel_space import (
    CoeffSeq,
    GeneratorPhi,
    Kernel,
    Lattice,
    analyze,
    apply_T,
    coeff_mixed_norm,
    compute_k_sup,
    decay_envelope_check,
    default_lattice,
    eval_coeff_at_points,
    eval_kernel,
    eval_phi,
    kernel_W_norm,
    modulus_w_eps,
    normalize_phi,
    synthesize,
)
from .sampling_analysis import (
    SampleSet,
    TheoryConstants,
    bernstein_tail_bound,
    ball_covering_number,
    compute_theory_constants,
    concentration_ratio,
    covering_bounds,
    covering_gap,
    draw_samples,
    empirical_frame_bounds,
    event_probability_bound,
    min_sample_count,
    grid_sample_set,
    deviation_bound_check,
    sampling_success_probability,
    sampling_inequality_check,
)
from .reconstruction import (
    PartitionOfUnity,
    build_partition,
    contraction_factor,
    error_certificate,
    iterate_reconstruct,
    quasi_interpolate,
    approx_project,
)
from .signal_io import load_signal, save_signal

__version__ = "0.1.0"
