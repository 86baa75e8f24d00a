from .acquisition import UCB_KAPPA, builtin_acquisition, ei, ucb
from .gp import GPFitError, GPModel, gp_fit, gp_posterior, se_kernel
from .loop import ACQ_COMPONENT, BORun, BORunResult, BOTask, bo_run, propose_next, random_search_gap
from .objectives import SYNTHETIC, SyntheticObjective, eval_synthetic, get_objective
from .tabular import TabularBenchmark, TabularFormatError, load_tabular
