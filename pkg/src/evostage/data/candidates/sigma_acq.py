import numpy as np


def utility(stage_index, iteration, best_f, mu, sigma):
    # explore first: sample where the model knows least
    return np.asarray(sigma)
