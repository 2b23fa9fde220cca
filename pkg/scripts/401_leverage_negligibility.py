from pathlib import Path

from tick_drift import settings
from tick_drift.experiments import load_config, run_leverage_experiment, write_outputs

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


def run_suite():
    print("--- 1. Unit leverage (delta = 1) ---")
    report = run_leverage_experiment(load_config(CONFIG_DIR / "lmsd_leverage_d1.json"))
    write_outputs(report)
    bounded = report.value("max_noise_sum_var")
    unit_ok = bounded <= 4.0
    print(f" > max Var(sum eta): {bounded:.4f} (bound 4)")

    print("\n--- 2. Fractional leverage (delta = 0.7) ---")
    report = run_leverage_experiment(load_config(CONFIG_DIR / "lmsd_leverage_d07.json"))
    write_outputs(report)
    slope, theory = report.value("noise_var_slope"), report.value("noise_var_slope_theory")
    frac_ok = abs(slope - theory) <= 0.1
    print(f" > variance slope {slope:.3f} (theory {theory:.3f})")

    print(f"\n[{'PASS' if unit_ok else 'FAIL'}] unit leverage")
    print(f"[{'PASS' if frac_ok else 'FAIL'}] fractional leverage")


if __name__ == "__main__":
    settings.configure_logging()
    run_suite()
