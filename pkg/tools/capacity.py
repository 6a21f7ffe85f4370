"""Symmetric-load capacity of a configured network and channel.

The largest uniform arrival rate the network can stably carry is, by LP
duality, the minimum over nonnegative link prices summing to one of the
expected max-weight activation value under prices times channel means:

    capacity = min_{w in simplex} E_m[ max_{x admissible} sum_e w_e mu_e(m) x_e ]

with the expectation over the stationary channel state m (each link in
either state with probability 1/2, independently).  The objective is convex
and piecewise linear in w, and every evaluated w upper-bounds the minimum,
so exponentiated-gradient descent reports a certified upper bound that is
typically within 0.1% of the exact value at the default iteration budget.
The inner maximization reuses the package's exact activation solver.

    python tools/capacity.py --grid 3 3
    python tools/capacity.py --grid 3 3 --states 0.25 0.75 --iters 6000

Numbers this produces for the standard 3x3 grid cell: capacity 0.1797
(exactly 0.1796875), with the minimizing prices concentrated on the four
center-node links (the bottleneck: at most one of them can be active per
slot, and the best of their four independent states averages 0.71875).
"""

import argparse

import numpy as np

from linksched import NodeExclusive, activation_table, build_grid, from_edges


def _all_states(num_links: int, states) -> np.ndarray:
    if num_links > 16:
        raise ValueError("exact state enumeration capped at 16 links; "
                         "use --samples for larger graphs")
    lo, hi = states
    codes = np.arange(2 ** num_links)
    bits = (codes[:, None] >> np.arange(num_links)[None, :]) & 1
    return np.where(bits == 1, hi, lo).astype(np.float64)


def symmetric_capacity(topology, states=(0.25, 0.75), iters: int = 3000,
                       samples: int | None = None, seed: int = 0):
    """Capacity for uniform loads, plus the minimizing link prices.

    Returns an upper bound converging to the exact capacity from above.
    ``samples`` switches the expectation to a Monte Carlo draw of channel
    states (needed beyond 16 links).
    """
    table = activation_table(NodeExclusive(), topology)
    X = table.rows  # (rows, E)
    E = topology.num_links
    if samples is None:
        mu_states = _all_states(E, states)
    else:
        rng = np.random.default_rng(seed)
        mu_states = np.where(rng.random((samples, E)) < 0.5, states[0],
                             states[1])

    def value_and_subgradient(w):
        # objective value per state and the maximizing activation's rates
        scores = X @ (w[None, :] * mu_states).T       # (rows, n_states)
        best = np.argmax(scores, axis=0)
        value = float(np.mean(scores[best, np.arange(len(mu_states))]))
        grad = np.mean(table.bits[best] * mu_states, axis=0)
        return value, grad

    w = np.full(E, 1.0 / E)
    best_value = np.inf
    best_w = w.copy()
    for k in range(1, iters + 1):
        value, grad = value_and_subgradient(w)
        if value < best_value:
            best_value = value
            best_w = w.copy()
        # exponentiated gradient step on the simplex
        w = w * np.exp(-(0.5 / np.sqrt(k)) * grad / np.max(grad))
        w = w / w.sum()
    return best_value, best_w


def main():
    parser = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    parser.add_argument("--grid", nargs=2, type=int, metavar=("R", "C"))
    parser.add_argument("--nodes", type=int)
    parser.add_argument("--edges", nargs="*", metavar="U,V")
    parser.add_argument("--states", nargs=2, type=float, default=(0.25, 0.75))
    parser.add_argument("--iters", type=int, default=3000)
    parser.add_argument("--samples", type=int, default=None,
                        help="Monte Carlo channel states (default: exact)")
    args = parser.parse_args()

    if args.grid:
        topology = build_grid(*args.grid)
    elif args.edges:
        edges = [tuple(int(x) for x in e.split(",")) for e in args.edges]
        topology = from_edges(args.nodes, edges)
    else:
        topology = build_grid(3, 3)

    cap, prices = symmetric_capacity(topology, tuple(args.states),
                                     iters=args.iters, samples=args.samples)
    print(f"links: {topology.num_links}, channel states: {tuple(args.states)}")
    print(f"symmetric-load capacity: {cap:.5f} packets/slot per link")
    print("minimizing link prices:")
    for e, (u, v) in enumerate(topology.links):
        print(f"  link {e:2d} ({u},{v}): {prices[e]:.4f}")


if __name__ == "__main__":
    main()
