from .adam import AdamState, adam_step
from .instance import MicroPlacementInstance, generate_instance, load_instance, reference_instance, save_instance
from .numerics import density_overflow, hpwl, smooth_wl
from .task import (
    PlacementRun,
    PlacementTask,
    ScheduleConfig,
    SubproblemSchedule,
    calibrated_schedule,
    run_subproblem_sequence,
    schedule_legality,
)
