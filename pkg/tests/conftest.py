import numpy as np
import pytest


@pytest.fixture(scope="session", autouse=True)
def warm_resampling_kernels():
    """Compile the numba resampling kernels once so individual tests and the
    acceptance runtime budgets measure steady-state speed."""
    from momoc._resample import resample_pull, resample_push
    from momoc.encoding import rotation_matrix

    tiny = np.zeros((4, 4, 4), dtype=np.complex128)
    m = rotation_matrix((1.0, 0.0, 0.0))
    resample_pull(tiny, m)
    resample_push(tiny, m)
    resample_pull(tiny.astype(np.complex64), m)
    yield
