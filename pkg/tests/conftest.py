import itertools

import pytest

from regcorr.syntax import Signature, parse

LEMMON = {
    "(1)": "box(p -> q) <= box(box p -> box q)",
    "(1')": "box(p -> q) <= (box p -> box q)",
    "(2)": "box p <= p",
    "(4)": "box p <= box box p",
    "(5)": "dia p <= box dia p",
}


@pytest.fixture(scope="session")
def sig():
    return Signature()


@pytest.fixture(scope="session")
def lemmon(sig):
    return {name: parse(text, sig) for name, text in LEMMON.items()}


@pytest.fixture(scope="session")
def frames2():
    from regcorr.semantics import enumerate_frames
    return list(enumerate_frames(2))


@pytest.fixture(scope="session")
def frames3():
    from regcorr.semantics import enumerate_frames
    return list(enumerate_frames(3))


def all_valuations(n, names):
    """Every assignment of subsets of an n-world frame to the given names."""
    full = (1 << n) - 1
    for combo in itertools.product(range(full + 1), repeat=len(names)):
        yield dict(zip(names, combo))
