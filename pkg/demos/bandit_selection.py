"""Epsilon-greedy path choice on two stationary paths.

Both paths deliver with the same latency law, but one costs twice as much, so
its utility is lower by ln 2 on every packet. Exploration decays as
eps0 / (1 + t / tau); the script prints how often the cheap path is chosen in
each block of 100 rounds, averaged over 20 seeds.
"""

import numpy as np

from pptp.consumer import BanditState, PathStats, UtilityModel, measured_v, select_path, update_estimate, utility

COST = {"cheap": 5, "dear": 10}
MODEL = UtilityModel("delay", alpha=1.0, beta=100.0)


def one_run(seed, rounds=1000):
    rng = np.random.default_rng(seed)
    bandit = BanditState({pid: PathStats() for pid in COST}, eps0=0.2, tau=200)
    chose_cheap = []
    for _ in range(rounds):
        pid = select_path(bandit, rng)
        chose_cheap.append(pid == "cheap")
        sample = PathStats()
        sample.record_delivery(int(rng.integers(8, 13)), MODEL.threshold)
        update_estimate(bandit, pid, utility(measured_v(sample, MODEL), COST[pid]))
    return np.array(chose_cheap), bandit


def main():
    runs = [one_run(seed) for seed in range(20)]
    blocks = np.mean([r.reshape(10, 100).mean(axis=1) for r, _ in runs], axis=0)
    print("rounds      share of cheap path")
    for i, share in enumerate(blocks):
        print(f"{i * 100 + 1:>4}-{(i + 1) * 100:<5}  {share:.3f}  {'#' * int(share * 40)}")
    _, bandit = runs[0]
    print("\nseed 0 estimates: " + ", ".join(f"{pid} {a.ewma_u:.3f}" for pid, a in bandit.arms.items()))
    print(f"final epsilon {bandit.epsilon:.4f}")


if __name__ == "__main__":
    main()
