from pathlib import Path

import numpy as np

from tick_drift import settings
from tick_drift.experiments import load_config, run_s2_experiment, run_ttest_experiment, write_outputs

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def in_band(rate: float) -> bool:
    return 0.035 <= rate <= 0.065


def run_suite():
    print("--- 1. Size in the benign Poisson case ---")
    config = load_config(CONFIG_DIR / "poisson_ttest.json")
    report = run_ttest_experiment(config)
    write_outputs(report)
    size_ok = in_band(report.value("rejection_rate", config.n_max))
    print(f" > rejection rate at n={config.n_max}: {report.value('rejection_rate', config.n_max):.4f}")

    print("\n--- 2. Divergence under long memory ---")
    config = load_config(CONFIG_DIR / "lmsd_h09_exp.json")
    report = run_ttest_experiment(config)
    write_outputs(report)
    rates = [report.value("rejection_rate", n) for n in config.n_grid]
    slope = report.value("t_divergence_slope")
    diverge_ok = bool(np.all(np.diff(rates) > 0)) and abs(slope - 0.4) <= 0.1
    print(f" > rejection rates: {', '.join(f'{r:.3f}' for r in rates)}")
    print(f" > median |t| slope: {slope:.3f} (theory 0.4)")

    print("\n--- 3. Size without drift ---")
    config = load_config(CONFIG_DIR / "lmsd_h09_exp_zero_drift.json")
    report = run_ttest_experiment(config)
    write_outputs(report)
    zero_ok = in_band(report.value("rejection_rate", config.n_max))
    print(f" > rejection rate at n={config.n_max}: {report.value('rejection_rate', config.n_max):.4f}")

    print("\n--- 4. s_n^2 limit ---")
    config = load_config(CONFIG_DIR / "poisson_s2.json")
    report = run_s2_experiment(config)
    write_outputs(report)
    s2 = report.value("s2_mean", config.n_max)
    s2_ok = abs(s2 - report.value("s2_target")) <= 0.001
    print(f" > mean s2 at n={config.n_max}: {s2:.5f} (target {report.value('s2_target'):.5f})")

    for label, ok in [("size", size_ok), ("divergence", diverge_ok), ("zero drift", zero_ok), ("s2", s2_ok)]:
        print(f"[{'PASS' if ok else 'FAIL'}] {label}")


if __name__ == "__main__":
    settings.configure_logging()
    run_suite()
