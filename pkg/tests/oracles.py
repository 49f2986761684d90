"""Independent solutions of the closed queuing network used to check MVA."""

import itertools
import math

import numpy as np

from lockthrash.analytic import QueuingModel


def ctmc_solution(model: QueuingModel):
    """Throughput and per-center queue lengths at N customers by solving pi Q = 0.

    Customers think (rate 1/Z each), pick center k with probability v_k,
    get exponential service (rate 1/s_k, one server) and go back to thinking.
    """
    n, z, centers = model.customers, model.think_time, model.centers
    k = len(centers)
    states = [s for s in itertools.product(range(n + 1), repeat=k) if sum(s) <= n]
    index = {s: i for i, s in enumerate(states)}
    q = np.zeros((len(states), len(states)))
    for s in states:
        thinking = n - sum(s)
        if thinking and z > 0:
            for c, center in enumerate(centers):
                t = list(s)
                t[c] += 1
                q[index[s], index[tuple(t)]] += thinking / z * center.visit_ratio
        for c, center in enumerate(centers):
            if s[c]:
                t = list(s)
                t[c] -= 1
                q[index[s], index[tuple(t)]] += 1 / center.service_time
    np.fill_diagonal(q, -q.sum(axis=1))
    a = np.vstack([q.T, np.ones(len(states))])
    b = np.zeros(len(states) + 1)
    b[-1] = 1
    pi = np.linalg.lstsq(a, b, rcond=None)[0]
    x = sum(p / centers[0].service_time for p, s in zip(pi, states) if s[0]) / centers[0].visit_ratio
    queues = [sum(p * s[c] for p, s in zip(pi, states)) for c in range(k)]
    return x, queues


def convolution_solution(model: QueuingModel):
    """Throughput at every population 1..N from normalizing constants."""
    n = model.customers
    # delay center first: terms Z^j / j!
    g = np.array([model.think_time**j / math.factorial(j) for j in range(n + 1)])
    for d in model.demands:
        for m in range(1, n + 1):
            g[m] = g[m] + d * g[m - 1]
    return [g[m - 1] / g[m] for m in range(1, n + 1)]


def birth_death_solution(n: int, z: float, s: float):
    """Single queue plus think time: throughput and queue length from the
    product-form balance equations pi_k = pi_0 * n!/(n-k)! * (s/z)^k."""
    if z == 0:
        return 1 / s, float(n)
    weights = [math.factorial(n) / math.factorial(n - k) * (s / z) ** k for k in range(n + 1)]
    total = math.fsum(weights)
    pi = [w / total for w in weights]
    return (1 - pi[0]) / s, math.fsum(k * p for k, p in enumerate(pi))
