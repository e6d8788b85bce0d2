import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from msync import Circle, FlatTorus, SpecialOrthogonal, Sphere, UnitaryRealified


def catalog():
    """One representative of every manifold family."""
    return [
        Circle(),
        Sphere(2),
        FlatTorus(1.0, 1.0),
        SpecialOrthogonal(3),
        UnitaryRealified(2),
    ]


@pytest.fixture(params=catalog(), ids=lambda m: m.kind)
def manifold(request):
    return request.param
