"""Process-wide knobs. THREADS feeds scipy.fft's workers argument."""

THREADS = 1


def set_threads(n: int) -> None:
    global THREADS
    THREADS = max(1, int(n))
