import numpy as np
import pytest

from qad.encode import Dataset

ACCEPTANCE_LINES: list[str] = []


def record(criterion: str, ok: bool, detail: str = "") -> None:
    line = f"[{'PASS' if ok else 'FAIL'}] {criterion}" + (f" -- {detail}" if detail else "")
    ACCEPTANCE_LINES.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_unit_dataset(rng, m: int, d: int) -> Dataset:
    """Normalized Gaussian rows; redrawn until every variance is comfortably nonzero."""
    while True:
        x = rng.normal(size=(m, d))
        data = Dataset.from_array(x)
        g = data.genuine
        if np.min(g.var(axis=0)) > 1e-6 and np.linalg.norm(g.mean(axis=0)) > 1e-6:
            return data


def dyadic_spectrum(rng, d: int, kappa: float, bits: int) -> np.ndarray:
    """Random eigenvalues, multiples of 2**-bits, each >= 1/kappa, summing to one."""
    total = 2**bits
    floor = int(np.ceil(total / kappa))
    if floor * d > total:
        raise ValueError("spectrum cannot fit")
    counts = np.full(d, floor)
    extra = total - counts.sum()
    counts += rng.multinomial(extra, np.ones(d) / d)
    return np.sort(counts / total)[::-1]


def dataset_with_covariance(rng, m: int, cov: np.ndarray, mean=None) -> Dataset:
    """Raw-scale dataset whose ``M - 1`` sample covariance equals ``cov`` to round-off."""
    d = cov.shape[0]
    vals, vecs = np.linalg.eigh(cov)
    a = rng.normal(size=(m, d))
    a -= a.mean(axis=0)
    q, _ = np.linalg.qr(a)
    z = q @ np.diag(np.sqrt((m - 1) * vals)) @ vecs.T
    mu = rng.normal(size=d) if mean is None else np.asarray(mean, float)
    return Dataset.from_array(z + mu, normalize_rows=False)


def random_orthogonal(rng, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)))
    return q * np.sign(np.diag(r))


def random_unitary(rng, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d)))
    return q * (np.diag(r) / np.abs(np.diag(r)))
