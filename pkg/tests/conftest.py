import numpy as np
import pytest

from rotating_atmosphere import StationaryState, assemble_pencil, reference_params, solve_pencil


@pytest.fixture(scope="session")
def ref_params():
    return reference_params()


@pytest.fixture(scope="session")
def ref_state(ref_params):
    return StationaryState(ref_params)


@pytest.fixture(scope="session")
def rest_state():
    return StationaryState(reference_params(omega=0.0))


@pytest.fixture(scope="session")
def pencil_m0(ref_state):
    return assemble_pencil(ref_state, m=0, n_s=6, n_zeta=6)


@pytest.fixture(scope="session")
def pencil_m1(ref_state):
    return assemble_pencil(ref_state, m=1, n_s=6, n_zeta=6)


@pytest.fixture(scope="session")
def pencil_rest(rest_state):
    return assemble_pencil(rest_state, m=0, n_s=6, n_zeta=6)


@pytest.fixture(scope="session")
def spectrum_m1(pencil_m1):
    return solve_pencil(pencil_m1[0])


@pytest.fixture(scope="session")
def spectrum_rest(pencil_rest):
    return solve_pencil(pencil_rest[0])


def random_pencil(rng, n, omega=0.1, complex_b=True):
    """Random A > 0, C >= 0, Hermitian B with |x*Bx| <= 2|omega| x*Ax."""
    from rotating_atmosphere import PencilMatrices
    g = rng.standard_normal((n, n))
    a = g @ g.T + n * np.eye(n)
    h = rng.standard_normal((n, n))
    c = h @ h.T
    if complex_b:
        s = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        s = 0.5 * (s + s.conj().T)
    else:
        s = rng.standard_normal((n, n))
        s = 0.5 * (s + s.T)
    # squeeze the pair (S, A) into [-1, 1], then scale by 2 omega
    ev, vec = np.linalg.eigh(a)
    ih = (vec / np.sqrt(ev)) @ vec.T
    s = s / np.max(np.abs(np.linalg.eigvalsh(ih @ s @ ih)))
    return PencilMatrices(a, 2 * omega * s, c, omega=omega)
