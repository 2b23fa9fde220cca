import numpy as np

from tick_drift import settings
from tick_drift.stochastic_kernels import FgnSpec, RandomStream, fgn_autocovariance, sample_fgn

LENGTH = 2**14
SERIES = 200
LAGS = 51
TOLERANCE = 0.02


def check_fgn():
    stream = RandomStream(settings.DEFAULT_SEED)
    passed = True
    for i, hurst in enumerate((0.6, 0.75, 0.9)):
        print(f"--- {i + 1}. Pooled autocovariance, H={hurst} ---")
        pooled = np.zeros(LAGS)
        for r in range(SERIES):
            y = sample_fgn(FgnSpec(hurst, LENGTH), stream.spawn(r))
            pooled += [np.mean(y[: LENGTH - k] * y[k:]) for k in range(LAGS)]
        error = np.abs(pooled / SERIES - fgn_autocovariance(hurst, np.arange(LAGS)))
        ok = error.max() <= TOLERANCE
        passed &= ok
        print(f" > max |error| over lags 0..{LAGS - 1}: {error.max():.4f} -> {'PASS' if ok else 'FAIL'}")
    print(f"\n[{'PASS' if passed else 'FAIL'}] fGn exactness")


if __name__ == "__main__":
    settings.configure_logging()
    check_fgn()
