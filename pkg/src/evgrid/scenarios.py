"""Canned scene scripts.

Five scripts mirror the qualitative failure archetypes of classic
cell clustering (appearing road boundary, swaying bushes, traffic barrier,
busy intersection with an over-segmented vehicle, two close vehicles merged
into one), plus utility scenes for negatives, convergence checks, and clean
single-mover runs.
"""

from __future__ import annotations

from .rotbox import canonicalize
from .scene import (
    APPEARING,
    MOVER,
    STATIC,
    VEGETATION,
    Entity,
    SceneScript,
    TimedPose,
)


def _box(cx, cy, w, h, psi=0.0):
    return canonicalize(cx, cy, w, h, psi)


def _parked_ego():
    return [TimedPose(0, 0, 0, 0)]


def appearing_boundary() -> SceneScript:
    """Scene 1: a road boundary strip pops into view mid-sequence.

    The newly occupied cells briefly sustain spurious particle support and
    the classic clusterer reports a ghost object.
    """
    return SceneScript(
        name="appearing_boundary",
        duration=6.0,
        ego=_parked_ego(),
        entities=[
            Entity(kind=STATIC, footprint=_box(0.0, -8.0, 30.0, 0.4)),
            Entity(kind=APPEARING, footprint=_box(12.0, 6.0, 18.0, 0.4), reveal_time=1.5),
        ],
    )


def swaying_bushes() -> SceneScript:
    """Scene 2: bushes next to the street breathe with the wind."""
    entities = [Entity(kind=STATIC, footprint=_box(0.0, -8.0, 40.0, 0.4))]
    for cx in (8.0, 12.0, 16.0):
        entities.append(
            Entity(
                kind=VEGETATION,
                footprint=_box(cx, 6.0, 2.2, 2.2),
                jitter_amplitude=0.45,
                jitter_period=1.6,
            )
        )
    return SceneScript(name="swaying_bushes", duration=6.0, ego=_parked_ego(), entities=entities)


def traffic_barrier() -> SceneScript:
    """Scene 3: driving along a long thin barrier; its freshly revealed cells
    pick up dynamic mass."""
    return SceneScript(
        name="traffic_barrier",
        duration=8.0,
        ego=[TimedPose(0, 0, 0, 0), TimedPose(8, 40, 0, 0)],
        entities=[
            Entity(kind=STATIC, footprint=_box(30.0, 4.0, 80.0, 0.4)),
        ],
    )


def busy_intersection() -> SceneScript:
    """Scene 4: several movers crossing an intersection."""
    return SceneScript(
        name="busy_intersection",
        duration=6.0,
        ego=_parked_ego(),
        entities=[
            Entity(
                kind=MOVER,
                footprint=_box(0, 0, 4.2, 1.8),
                trajectory=[TimedPose(0, -25, 10, 0), TimedPose(6, 29, 10, 0)],
            ),
            Entity(
                kind=MOVER,
                footprint=_box(0, 0, 4.2, 1.8),
                trajectory=[TimedPose(0, 25, 16, 180), TimedPose(6, -23, 16, 180)],
            ),
            Entity(
                kind=MOVER,
                footprint=_box(0, 0, 4.2, 1.8, 90),
                trajectory=[TimedPose(0, -8, 30, -90), TimedPose(6, -8, -26, -90)],
            ),
        ],
    )


def single_vehicle_split() -> SceneScript:
    """Scene 4 variant: one long articulated bus crossing the field of view.

    Per-cell velocity estimates along the 12 m hull settle at different
    times, so the velocity gate of the classic clusterer cuts the blob in
    two and reports a single vehicle as two objects.
    """
    return SceneScript(
        name="single_vehicle_split",
        duration=6.0,
        ego=_parked_ego(),
        entities=[
            Entity(
                kind=MOVER,
                footprint=_box(0, 0, 12.0, 2.4),
                trajectory=[TimedPose(0, -22, 12.0, 0), TimedPose(6, 20, 12.0, 0)],
            ),
        ],
    )


def two_close_vehicles() -> SceneScript:
    """Scene 5: a leading and a trailing vehicle with a sub-cluster-radius gap
    are merged into a single object by the classic clusterer."""
    gap = 1.2  # bumper-to-bumper, below the 1.5 m cluster radius
    length = 4.0
    dx = length + gap
    return SceneScript(
        name="two_close_vehicles",
        duration=6.0,
        ego=_parked_ego(),
        entities=[
            Entity(
                kind=MOVER,
                footprint=_box(0, 0, length, 1.8),
                trajectory=[TimedPose(0, -18, 10, 0), TimedPose(6, 24, 10, 0)],
            ),
            Entity(
                kind=MOVER,
                footprint=_box(0, 0, length, 1.8),
                trajectory=[TimedPose(0, -18 + dx, 10, 0), TimedPose(6, 24 + dx, 10, 0)],
            ),
        ],
    )


def empty_street() -> SceneScript:
    """Negative mining: static street furniture only, nothing moves."""
    return SceneScript(
        name="empty_street",
        duration=6.0,
        ego=_parked_ego(),
        entities=[
            Entity(kind=STATIC, footprint=_box(0.0, -7.0, 50.0, 0.4)),
            Entity(kind=STATIC, footprint=_box(0.0, 7.0, 50.0, 0.4)),
            Entity(kind=STATIC, footprint=_box(18.0, 0.0, 1.0, 1.0)),
        ],
    )


def single_mover() -> SceneScript:
    """One clean vehicle in the open; the auto-labeling reference scene."""
    return SceneScript(
        name="single_mover",
        duration=6.0,
        ego=_parked_ego(),
        entities=[
            Entity(
                kind=MOVER,
                footprint=_box(0, 0, 4.2, 1.8),
                trajectory=[TimedPose(0, -15, 8, 0), TimedPose(6, 21, 8, 0)],
            ),
        ],
    )


def static_wall() -> SceneScript:
    """A single wall observed from a parked ego; convergence reference."""
    return SceneScript(
        name="static_wall",
        duration=4.0,
        ego=_parked_ego(),
        entities=[Entity(kind=STATIC, footprint=_box(10.0, 0.0, 8.0, 0.6, 90))],
    )


BUILDERS = {
    "appearing_boundary": appearing_boundary,
    "swaying_bushes": swaying_bushes,
    "traffic_barrier": traffic_barrier,
    "busy_intersection": busy_intersection,
    "single_vehicle_split": single_vehicle_split,
    "two_close_vehicles": two_close_vehicles,
    "empty_street": empty_street,
    "single_mover": single_mover,
    "static_wall": static_wall,
}

# the five failure-archetype scenes, in presentation order
FIGURE_SUITE = (
    "appearing_boundary",
    "swaying_bushes",
    "traffic_barrier",
    "busy_intersection",
    "two_close_vehicles",
)


def canned_scenario(name: str) -> SceneScript:
    try:
        return BUILDERS[name]()
    except KeyError:
        raise KeyError(
            f"unknown scenario {name!r}; available: {', '.join(sorted(BUILDERS))}"
        ) from None
