import math

import numpy as np


def _ei(mu, sigma, best_f):
    sigma = np.maximum(sigma, 1e-12)
    z = (best_f - mu) / sigma
    cdf = 0.5 * (1.0 + np.vectorize(math.erf)(z / math.sqrt(2.0)))
    pdf = np.exp(-0.5 * z * z) / math.sqrt(2.0 * math.pi)
    return (best_f - mu) * cdf + sigma * pdf


def utility(stage_index, iteration, best_f, mu, sigma):
    ucb = -mu + 2.0 * sigma
    return 0.4 * _ei(mu, sigma, best_f) + 0.6 * ucb
