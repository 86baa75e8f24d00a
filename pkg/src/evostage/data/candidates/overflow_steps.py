def optimization_steps(subproblem_index, overflow, log_lambda):
    # spend more steps while overflow is high
    return 10 + int((40 - 10) * min(overflow, 1.0))
