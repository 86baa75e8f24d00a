def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm):
    # larger moves while cells still overlap a lot, smaller ones near the target
    rate = 0.08 * (1.0 + 0.5 * overflow)
    if log_objective > log_objective_prev:
        rate *= 0.7
    return rate
