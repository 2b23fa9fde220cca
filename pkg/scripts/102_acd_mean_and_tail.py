import numpy as np

from tick_drift import settings
from tick_drift.duration_models import AcdParams, acd_alpha_for_tail_index, acd_tail_index, simulate_acd
from tick_drift.inference import hill_estimator
from tick_drift.stochastic_kernels import RandomStream

TAIL_CASES = [(1.2, 0.0), (1.4, 0.0), (1.5, 0.2), (1.7, 0.0), (1.9, 0.1)]


def check_acd():
    stream = RandomStream(settings.DEFAULT_SEED)

    print("--- 1. Stationary mean over 50 seeds ---")
    params = AcdParams(omega=0.2, alpha=0.1, beta=0.8)
    means = [simulate_acd(params, 1_000_000, stream.spawn(r)).durations.mean() for r in range(50)]
    grand = float(np.mean(means))
    mean_ok = abs(grand - 2.0) <= 0.02
    print(f" > grand mean {grand:.4f} (target 2.0) -> {'PASS' if mean_ok else 'FAIL'}")

    print("\n--- 2. Tail index solver vs Hill ---")
    tail_ok = True
    for i, (kappa, beta) in enumerate(TAIL_CASES):
        alpha = acd_alpha_for_tail_index(kappa, beta=beta)
        tuned = AcdParams(omega=1.0 - alpha - beta, alpha=alpha, beta=beta)
        solved = acd_tail_index(tuned)
        durations = simulate_acd(tuned, 1_000_000, stream.spawn(1000 + i)).durations
        hill = hill_estimator(durations, 1000).value
        ok = abs(hill - solved) <= 0.15
        tail_ok &= ok
        print(f" > alpha={alpha:.5f} beta={beta:g}: kappa*={solved:.4f}, Hill={hill:.4f} -> {'PASS' if ok else 'FAIL'}")

    print(f"\n[{'PASS' if mean_ok and tail_ok else 'FAIL'}] ACD mean and tail index")


if __name__ == "__main__":
    settings.configure_logging()
    check_acd()
