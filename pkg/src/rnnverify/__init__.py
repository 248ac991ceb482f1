"""Train small recurrent networks on the Tomita grammars, extract DFAs from
their hidden-state dynamics, score the grammars' edit-distance complexity,
and verify adversarial robustness against the exact DFA oracles."""

from ._native import backend_name
from .automata import (
    BINARY_ALPHABET,
    NEGATIVE,
    POSITIVE,
    TOMITA_DESCRIPTIONS,
    TOMITA_IDS,
    Dfa,
    LabeledDataset,
    count_strings,
    dataset_from_csv,
    dataset_to_csv,
    dfa_from_text,
    dfa_to_text,
    enumerate_strings,
    equivalent,
    generate_dataset,
    load_dfa,
    minimize,
    sample_strings,
    save_dfa,
    split_dataset,
    tomita_dfa,
)
from .evaluation import (
    SweepSummary,
    TrialResult,
    accuracy,
    fidelity,
    inject_label_noise,
    predict_labels,
    run_sweep,
    run_trial,
    success_rate,
    summarize_sweep,
)
from .extraction import (
    ExtractedDfa,
    ExtractionConfig,
    ExtractionError,
    Quantization,
    TransitionDiagram,
    build_diagram,
    extract_dfa,
    kmeans,
    prune_to_dfa,
    quantize,
    synthetic_state_traces,
)
from .metrics import (
    ComplexityClass,
    DistanceReport,
    average_edit_distance_at_n,
    complexity_class,
    distance_grid,
    edit_distance,
    min_distance_to_set,
)
from .rnn import (
    CELL_KINDS,
    HiddenTrace,
    RnnModel,
    TrainConfig,
    TrainingDiverged,
    balance_hidden_sizes,
    check_gradients,
    classify,
    classify_many,
    count_parameters,
    load_model,
    new_model,
    record_traces,
    save_model,
    scores,
    train,
)
from .verification import (
    AdversarialTrial,
    EquivalenceResult,
    Neighborhood,
    SamplingExhausted,
    VerificationReport,
    adversarial_accuracy,
    equivalence_check,
    length_sweep,
    local_invariance,
    neighborhood,
    sample_agreed_centers,
    verify_model,
    verify_witness,
)

__version__ = "0.1.0"
