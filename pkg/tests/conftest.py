import math
import random

import pytest

from vinesim.steering import ActuatorLayout


@pytest.fixture
def layout():
    """Equally spaced default layout: 90/210/330 degrees."""
    return ActuatorLayout()


@pytest.fixture
def rng():
    return random.Random(20180424)


def embed_tip_3d(arc):
    """Independent 3D lift of the planar tip offset: (x, y, sin(ks)/k)."""
    from vinesim.kinematics import arc_to_tip

    tip = arc_to_tip(arc)
    if arc.kappa == 0.0:
        return (0.0, 0.0, arc.s)
    return (tip.x, tip.y, math.sin(arc.kappa * arc.s) / arc.kappa)
