import pytest

from shopfloor.instances import paper_instance


@pytest.fixture(scope="session")
def paper():
    return paper_instance()


# Optimal makespan of the bundled 3x3 instance, from the exact search and
# cross-checked in test_exact by an independent order-enumeration oracle.
PAPER_OPTIMAL_MAKESPAN = 163.0
