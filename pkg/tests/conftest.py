import pytest

from burnlab.oracle import OracleBudget
from burnlab.presentation import GradedPresentation, SmallCancellationParams
from burnlab.words import Alphabet


def small_k_params(k=3):
    return SmallCancellationParams(k=k, allow_small_k=True)


@pytest.fixture(scope="session")
def budget():
    return OracleBudget()


@pytest.fixture(scope="session")
def free_m1():
    # rank 0: no relators at all
    return GradedPresentation(Alphabet(1), small_k_params())


@pytest.fixture(scope="session")
def free_m2():
    return GradedPresentation(Alphabet(2), small_k_params(k=5))


@pytest.fixture(scope="session")
def p_k3_m1_r1():
    pres, _ = GradedPresentation.build(Alphabet(1), small_k_params(), 1,
                                       OracleBudget())
    return pres


@pytest.fixture(scope="session")
def p_k3_m1_r2():
    pres, _ = GradedPresentation.build(Alphabet(1), small_k_params(), 2,
                                       OracleBudget())
    return pres


@pytest.fixture(scope="session")
def p_k5_m1_r1():
    pres, _ = GradedPresentation.build(Alphabet(1), small_k_params(k=5), 1,
                                       OracleBudget())
    return pres


@pytest.fixture(scope="session")
def p_k5_m2_r2():
    pres, _ = GradedPresentation.build(Alphabet(2), small_k_params(k=5), 2,
                                       OracleBudget())
    return pres
