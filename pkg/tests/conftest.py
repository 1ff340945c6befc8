import math

import numpy as np
import pytest

from dplr import lpkernel
from dplr.caseio import bundled_case
from dplr.model import GeneratingUnit, LoadProfile, TransmissionLine, UcInstance
from dplr.oracle import mc1

KKT_LIMIT = 1e-8


@pytest.fixture(autouse=True)
def kkt_audit():
    """Every optimal LP solved during a test must satisfy the KKT conditions."""
    lpkernel.KKT_AUDIT = []
    yield
    audit, lpkernel.KKT_AUDIT = lpkernel.KKT_AUDIT, None
    worst = {k: max((r[k] for r in audit), default=0.0) for k in ("primal", "dual", "complementarity", "gap")}
    assert all(v <= KKT_LIMIT for v in worst.values()), f"KKT residuals above {KKT_LIMIT}: {worst}"


@pytest.fixture
def mc1_case():
    return mc1()


@pytest.fixture(scope="session")
def rts24():
    return bundled_case("rts24")


def make_unit(uid="G1", bus="1", p_min=10.0, p_max=50.0, a=1.0, b=0.0, startup=0.0, ramp=math.inf,
              min_up=1, min_down=1, init_on=False, init_duration=1, init_power=0.0, su=None, sd=None):
    su = ramp if su is None else su
    sd = ramp if sd is None else sd
    return GeneratingUnit(uid, bus, p_min, p_max, a, b, startup, ramp, ramp, max(su, p_min), max(sd, p_min),
                          min_up, min_down, init_on, init_duration, init_power)


def single_bus(units, demand, buses=("1",)):
    """One-bus (or given-bus, lineless) instance with all load at the first bus."""
    T = len(demand)
    lines = [TransmissionLine(f"L{k}", buses[k - 1], buses[k], 0.1, math.inf) for k in range(1, len(buses))]
    return UcInstance(units, lines, list(buses), [LoadProfile(buses[0], tuple(demand))], T, buses[0])


def rng_for(seed):
    return np.random.default_rng(seed)
