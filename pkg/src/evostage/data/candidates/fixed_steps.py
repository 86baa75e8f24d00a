def optimization_steps(subproblem_index, overflow, log_lambda):
    return 20
