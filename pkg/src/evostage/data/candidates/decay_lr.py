import math


def adjust_learning_rate(step_num, log_objective, log_objective_prev, overflow, log_lambda,
                         learning_rate_prev, log_gradient_norm):
    # exponential decay, halving every 200 steps, never below a tenth
    return max(0.15 * math.pow(0.5, step_num / 200), 0.015)
