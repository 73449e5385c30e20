"""Exception types raised by the simulation layers."""


class VeclidarError(Exception):
    """Base class for all package errors."""


class EmptyMesh(VeclidarError):
    """A BVH was requested for a mesh with zero triangles."""


class TopologyChanged(VeclidarError):
    """Refit was attempted after the mesh triangle count changed."""


class InvalidEnv(VeclidarError):
    """Environment id outside [0, n_envs)."""


class AlreadyRegistered(VeclidarError):
    """A static mesh was registered twice for the same environment."""


class UnknownEntity(VeclidarError):
    """A transform referenced an entity id that was never registered."""


class StaleDynamicBvh(VeclidarError):
    """Raycast attempted before update_dynamic refreshed the dynamic mesh."""


class UpdateInProgress(VeclidarError):
    """Raycast attempted while an exclusive update phase is running."""


class InvalidSpec(VeclidarError):
    """Scan-pattern specification violates its invariants."""


class ShapeMismatch(VeclidarError):
    """A processed frame does not match the configured pipeline shape."""


class LengthMismatch(VeclidarError):
    """Robot state arrays have mutually inconsistent lengths."""


class EmptyRays(VeclidarError):
    """reward_rays called with no ray distances."""


class SceneFormatError(VeclidarError):
    """Scene or pattern description file failed schema validation."""
