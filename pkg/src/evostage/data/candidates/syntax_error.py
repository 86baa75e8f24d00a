def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm)
    return 0.1
