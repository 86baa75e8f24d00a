from .handle import (
    CandidateHandle,
    HandleState,
    SandboxConfigError,
    call_candidate,
    default_runtime_command,
    live_handle_count,
    spawn_candidate,
)
from .legality import (
    CandidateFailure,
    DomainRules,
    ExecutionOutcome,
    LegalityVerdict,
    PassRate,
    classify_legality,
    pass_rate,
)
