from pathlib import Path

from tick_drift import settings
from tick_drift.experiments import load_config, run_rate_experiment, write_outputs

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"

# scenario -> tolerance on |gamma_hat - gamma_theory|
SCENARIOS = {
    "lmsd_h09_exp": 0.05,
    "acd_kappa13": 0.07,
    "lmsd_h06_square": 0.04,
    "poisson_rate": 0.03,
}


def run_suite():
    passed = True
    for i, (name, tolerance) in enumerate(SCENARIOS.items()):
        print(f"--- {i + 1}. Rate experiment: {name} ---")
        config = load_config(CONFIG_DIR / f"{name}.json")
        report = run_rate_experiment(config)
        write_outputs(report)
        error = report.value("gamma_error")
        ok = error <= tolerance
        if "hill_index" in {row["metric"] for row in report.rows}:
            hill = report.value("hill_index", config.n_max)
            ok &= abs(hill - 1.0 / report.value("gamma_theory")) <= 0.2
            print(f" > Hill index of normalized sums: {hill:.3f}")
        if "ks_vs_gaussian" in {row["metric"] for row in report.rows}:
            ok &= report.value("ks_vs_gaussian", config.n_max) < report.value("ks_critical_1pct", config.n_max)
        passed &= ok
        print(
            f" > gamma_theory={report.value('gamma_theory'):.4f} "
            f"gamma_hat={report.value('gamma_hat'):.4f} -> {'PASS' if ok else 'FAIL'}\n"
        )
    print(f"[{'PASS' if passed else 'FAIL'}] rate suite")


if __name__ == "__main__":
    settings.configure_logging()
    run_suite()
