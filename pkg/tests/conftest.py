import pytest

import dsauction as da

STUDY_SIZES = ((2, 3), (2, 6), (2, 10), (3, 2), (4, 4))
FAMILY_BASE_SEED = 20_000

# per-template seeds whose efficient solution keeps at least one seller
# interior, so the surcharge sweep has no welfare plateau at the start
TEMPLATE_SEEDS = {
    (2, 3): 77_005,
    (2, 6): 77_001,
    (2, 10): 77_002,
    (3, 2): 77_003,
    (4, 4): 77_009,
}


def unit_log():
    return da.LogUtility(1.0, 1.0)


@pytest.fixture(scope="session")
def r1():
    """One unit-log buyer vs one unit-log seller with g = 1."""
    return da.Scenario((da.BuyerSpec(unit_log()),),
                       (da.SellerSpec(unit_log(), 1.0),))


@pytest.fixture(scope="session")
def study_sizes():
    return STUDY_SIZES


@pytest.fixture(scope="session")
def family():
    """100 seeded random scenarios cycling through the five study sizes."""
    out = []
    for k in range(100):
        nb, ns = STUDY_SIZES[k % 5]
        out.append(da.generate_scenario(
            da.GenerationConfig(nb, ns, seed=FAMILY_BASE_SEED + k)))
    return out


@pytest.fixture(scope="session")
def template_scenarios():
    """One representative scenario per study size."""
    return {size: da.generate_scenario(da.GenerationConfig(*size, seed=seed))
            for size, seed in TEMPLATE_SEEDS.items()}
