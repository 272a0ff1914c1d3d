"""demonlab: Szilard/Gabor engine simulation with exact information accounting.

The package answers, mechanically, why no deterministic demon beats the
second law: measurement is free but leaves a record, records cost a
kT-bit per bit to erase, and every scheme for dodging the bill (undoing
measurements, dumping compartments, hoarding a tape and compressing it)
pays at least as much as it gains, on average.
"""

from .coding import (
    Codeword,
    RecordTape,
    asymptotic_k,
    binomial,
    ceil_log2,
    codeword_length,
    coding_bound_check,
    enumerative_decode,
    enumerative_encode,
    k_estimate,
    pack_codeword,
    tape_from_rank,
    tape_rank,
    unpack_codeword,
)
from .demon import (
    Action,
    LivelockWitness,
    Policy,
    PolicyEvaluation,
    RunReport,
    SearchReport,
    Termination,
    enumerate_policies,
    evaluate_policy,
    extract_first_policy,
    find_seeds_forcing_side,
    make_policy,
    policy_presets,
    run_delayed_erasure_demon,
    run_demon_of_choice_extract_first,
    run_demon_of_choice_undo_first,
    run_policy,
    run_standard_demon,
    standard_policy,
    step,
    undo_first_policy,
)
from .engine import (
    DemonState,
    EngineGeometry,
    EngineWorld,
    MeasurementBudget,
    Register,
    Side,
    WorkLedger,
    erase,
    expected_cycle_work,
    extract_partition,
    extractable_work,
    insert_partition,
    isothermal_expansion,
    measure,
    measurement_budget,
    net_cycle_work,
    physical_entropy,
    undo_measurement,
)
from .errors import (
    BlankEraseWarning,
    CorruptCodewordError,
    ProtocolError,
    SearchSpaceError,
    ValidationError,
)
from .infotheory import (
    DensityMatrix,
    MeasurementAudit,
    MeasurementUnitary,
    ProjectorSet,
    binary_entropy,
    build_measurement_unitary,
    correlated_state,
    holevo_chi,
    measurement_entropy_audit,
    mutual_information,
    partial_trace,
    shannon_entropy,
    validate_distribution,
    von_neumann_entropy,
)
from .seeding import make_rng, trial_rng

__version__ = "0.1.0"
