"""Synthetic particle scenes that feed the workload estimator.

Spheres are dropped into a box (optionally shaped by inclined planes) and
sink kinematically until they rest on the floor, a plane or each other.
The physics is deliberately crude: only the spatio-temporal pattern of the
block quantities matters for load balancing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Mapping, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .estimator import PARTS, EstimatorCoefficients, TimingSample, part_features, quantity_matrix
from .grid import BlockGrid, BlockQuantities, build_grid

OVERLAP_TOL = 0.05
MAX_PACKING = 0.64
# hindered settling: speed falls linearly with local solid fraction, never below this share
MIN_SPEED_FACTOR = 0.1
# kinematic update length as a fraction of the diameter
UPDATE_FRACTION = 0.05
# displacement (fraction of D) above which a sphere wakes its sleeping neighbours
WAKE_DISTANCE = 0.01
# D3Q19 stencil without the rest direction
STENCIL = [
    d
    for d in ((a, b, c) for a in (-1, 0, 1) for b in (-1, 0, 1) for c in (-1, 0, 1))
    if 1 <= abs(d[0]) + abs(d[1]) + abs(d[2]) <= 2
]


class InfeasibleConfiguration(ValueError):
    """Particles could not be placed without overlap."""


@dataclass(frozen=True)
class Plane:
    """Half-space boundary; ``normal`` points into the fluid, the other side is solid."""

    point: tuple[float, float, float]
    normal: tuple[float, float, float]

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        n = np.asarray(self.normal, dtype=float)
        n = n / np.linalg.norm(n)
        return (np.asarray(x, dtype=float) - np.asarray(self.point, dtype=float)) @ n

    def unit_normal(self) -> np.ndarray:
        n = np.asarray(self.normal, dtype=float)
        return n / np.linalg.norm(n)


@dataclass(frozen=True)
class ScenarioConfig:
    name: str
    dims: tuple[int, int, int]
    block_size: int
    diameter: float
    volume_fraction: float | None = 0.2
    n_particles: int | None = None
    # cells per time step; the lattice speed is one cell per step
    settling_speed: float = 0.02
    sub_cycles: int = 10
    top_offset: float = 0.0
    obstacles: tuple[Plane, ...] = ()
    duration: int = 0
    seed: int = 0
    # vertical band (cells) for the initial placement, None for the whole fluid height
    init_band: tuple[float, float] | None = None
    galileo: float = 30.0
    density_ratio: float = 2.5

    def __post_init__(self):
        if self.diameter < 2:
            raise ValueError(f"diameter must be >= 2 cells, got {self.diameter}")
        if self.volume_fraction is not None and not (0 < self.volume_fraction <= MAX_PACKING):
            raise ValueError(f"volume fraction must lie in (0, {MAX_PACKING}], got {self.volume_fraction}")
        if self.volume_fraction is None and self.n_particles is None:
            raise ValueError("either volume_fraction or n_particles is required")
        if self.n_particles is not None and self.n_particles < 0:
            raise ValueError("particle count must be non-negative")
        if self.settling_speed <= 0:
            raise ValueError("settling speed must be positive")
        if self.sub_cycles < 1:
            raise ValueError("sub-cycle count must be >= 1")
        if self.duration < 0:
            raise ValueError("duration must be non-negative")
        if not (0 <= self.top_offset < self.dims[2] * self.block_size):
            raise ValueError("top offset must leave some fluid height")

    @property
    def grid(self) -> BlockGrid:
        return build_grid(self.dims, self.block_size)

    @property
    def extent(self) -> tuple[float, float, float]:
        b = self.block_size
        return (self.dims[0] * b, self.dims[1] * b, self.dims[2] * b)

    @property
    def fluid_height(self) -> float:
        return self.extent[2] - self.top_offset

    @property
    def solid_planes(self) -> tuple[Plane, ...]:
        """Planes that flag cells as solid: the lowered top wall plus any obstacles."""
        planes = list(self.obstacles)
        if self.top_offset > 0:
            planes.insert(0, Plane((0.0, 0.0, self.fluid_height), (0.0, 0.0, -1.0)))
        return tuple(planes)

    @property
    def sphere_volume(self) -> float:
        return math.pi * self.diameter**3 / 6

    def fluid_volume(self) -> float:
        """Cells whose centre lies outside every solid plane."""
        return float(sum(int((~s).sum()) for s in _plane_slabs(self)))

    def particle_count(self) -> int:
        if self.n_particles is not None:
            return self.n_particles
        return int(round(self.volume_fraction * self.fluid_volume() / self.sphere_volume))

    def update_steps(self) -> int:
        """Time steps per kinematic update, so one update moves about D/20."""
        return max(1, int(round(UPDATE_FRACTION * self.diameter / self.settling_speed)))


def _plane_slabs(config: ScenarioConfig):
    # one z-slab per block layer keeps memory bounded on large grids
    nx, ny, nz = config.extent
    b = config.block_size
    xs = np.arange(nx) + 0.5
    ys = np.arange(ny) + 0.5
    for k in range(config.dims[2]):
        zs = np.arange(k * b, (k + 1) * b) + 0.5
        yield _solid_planes_mask(config.solid_planes, xs, ys, zs)


def _solid_planes_mask(planes, xs, ys, zs) -> np.ndarray:
    mask = np.zeros((xs.size, ys.size, zs.size), dtype=bool)
    for plane in planes:
        n = plane.unit_normal()
        p = np.asarray(plane.point, dtype=float)
        s = (
            ((xs - p[0]) * n[0])[:, None, None]
            + ((ys - p[1]) * n[1])[None, :, None]
            + ((zs - p[2]) * n[2])[None, None, :]
        )
        mask |= s < 0
    return mask


PRESETS = ("settling-box", "hopper")


def _scaled_dims(dims, scale):
    return tuple(max(1, math.ceil(d * scale)) for d in dims)


def make_preset(name: str, scale: float = 1.0, seed: int = 0) -> ScenarioConfig:
    """Scenario presets; ``scale`` in (0, 1] shrinks the block counts per axis (rounded up)."""
    if not (0 < scale <= 1):
        raise ValueError(f"scale must lie in (0, 1], got {scale}")
    b_s = 32
    if name == "settling-box":
        dims = _scaled_dims((4, 4, 5), scale)
        top_offset = 1.05 * b_s
        speed = 0.02
        height = dims[2] * b_s - top_offset
        return ScenarioConfig(
            name=name,
            dims=dims,
            block_size=b_s,
            diameter=10.0,
            volume_fraction=0.2,
            settling_speed=speed,
            sub_cycles=10,
            top_offset=top_offset,
            duration=int(round(2.5 * height / speed)),
            seed=seed,
            galileo=30.0,
            density_ratio=2.5,
        )
    if name == "hopper":
        dims = _scaled_dims((12, 12, 16), scale)
        Lx, Ly, Lz = (d * b_s for d in dims)
        speed = 0.02
        count = int(round(4300 * (dims[0] * dims[1] * dims[2]) / 2304))
        diameter = 15.0
        # cross-section shrinks to 40 % of the top area at the floor
        shrink = (1 - math.sqrt(0.4)) / 2
        ax, ay = shrink * Lx, shrink * Ly
        obstacles = (
            Plane((0.0, 0.0, Lz), (Lz, 0.0, ax)),
            Plane((Lx, 0.0, Lz), (-Lz, 0.0, ax)),
            Plane((0.0, 0.0, Lz), (0.0, Lz, ay)),
            Plane((0.0, Ly, Lz), (0.0, -Lz, ay)),
        )
        packed = count * math.pi * diameter**3 / 6 / 0.3
        band = min(float(Lz), max(2 * diameter, packed / (Lx * Ly)))
        return ScenarioConfig(
            name=name,
            dims=dims,
            block_size=b_s,
            diameter=diameter,
            volume_fraction=None,
            n_particles=count,
            settling_speed=speed,
            sub_cycles=10,
            top_offset=0.0,
            obstacles=obstacles,
            duration=int(round(2.5 * Lz / speed)),
            seed=seed,
            init_band=(Lz - band, float(Lz)),
            galileo=50.0,
            density_ratio=1.5,
        )
    raise ValueError(f"unknown preset {name!r}; choose from {', '.join(PRESETS)}")


def calibration_configs(
    scale: float = 0.5,
    block_sizes: Sequence[int] = (24, 32, 48),
    diameters: Sequence[float] = (10.0, 20.0),
    seed: int = 0,
) -> list[ScenarioConfig]:
    """Settling-box variants over several block sizes and diameters, as used for calibration."""
    base = make_preset("settling-box", scale, seed=seed)
    configs = []
    for i, b_s in enumerate(block_sizes):
        for j, d in enumerate(diameters):
            top = 1.05 * b_s
            height = base.dims[2] * b_s - top
            configs.append(
                replace(
                    base,
                    block_size=b_s,
                    diameter=float(d),
                    top_offset=top,
                    duration=int(round(2.5 * height / base.settling_speed)),
                    seed=seed + 101 * i + 7 * j,
                )
            )
    return configs


@dataclass(frozen=True, eq=False)
class ParticleScene:
    centers: np.ndarray
    velocities: np.ndarray
    settled: np.ndarray
    moved: np.ndarray
    diameter: float
    extent: tuple[float, float, float]
    planes: tuple[Plane, ...]
    settling_speed: float
    overlap_tol: float = OVERLAP_TOL

    def __post_init__(self):
        for arr in (self.centers, self.velocities, self.settled, self.moved):
            arr.flags.writeable = False

    @property
    def n(self) -> int:
        return len(self.centers)

    @property
    def radius(self) -> float:
        return self.diameter / 2

    def __eq__(self, other) -> bool:
        if not isinstance(other, ParticleScene):
            return NotImplemented
        return (
            self.diameter == other.diameter
            and self.extent == other.extent
            and self.planes == other.planes
            and np.array_equal(self.centers, other.centers)
            and np.array_equal(self.velocities, other.velocities)
            and np.array_equal(self.settled, other.settled)
            and np.array_equal(self.moved, other.moved)
        )

    def is_at_rest(self) -> bool:
        return bool(self.settled.all() and not self.moved.any())

    def potential_height(self) -> float:
        return math.fsum(self.centers[:, 2]) if self.n else 0.0


def _wall_planes(extent) -> list[tuple[np.ndarray, np.ndarray]]:
    Lx, Ly, _ = extent
    walls = [
        ((0.0, 0.0, 0.0), (1.0, 0.0, 0.0)),
        ((Lx, 0.0, 0.0), (-1.0, 0.0, 0.0)),
        ((0.0, 0.0, 0.0), (0.0, 1.0, 0.0)),
        ((0.0, Ly, 0.0), (0.0, -1.0, 0.0)),
        ((0.0, 0.0, 0.0), (0.0, 0.0, 1.0)),
    ]
    return [(np.asarray(p), np.asarray(n)) for p, n in walls]


def _constraints(scene: ParticleScene) -> tuple[np.ndarray, np.ndarray]:
    """Stacked (points, unit normals) of every plane a sphere must stay clear of."""
    planes = _wall_planes(scene.extent) + [
        (np.asarray(p.point, dtype=float), p.unit_normal()) for p in scene.planes
    ]
    return np.array([p for p, _ in planes]), np.array([n for _, n in planes])


def init_scene(config: ScenarioConfig) -> ParticleScene:
    """Seeded random sequential placement of non-overlapping spheres."""
    n = config.particle_count()
    D = config.diameter
    r = D / 2
    Lx, Ly, _ = config.extent
    lo_z, hi_z = config.init_band or (0.0, config.fluid_height)
    lo = np.array([r, r, max(r, lo_z + r)])
    hi = np.array([Lx - r, Ly - r, min(config.fluid_height - r, hi_z - r)])
    if n and np.any(hi < lo):
        raise InfeasibleConfiguration("domain too small for a single particle")

    planes = config.solid_planes
    P = np.array([p.point for p in planes], dtype=float).reshape(-1, 3)
    N = np.array([p.unit_normal() for p in planes], dtype=float).reshape(-1, 3)

    rng = np.random.default_rng(config.seed)
    buckets: dict[tuple[int, int, int], list[int]] = {}
    placed: list[np.ndarray] = []
    max_attempts = 2000 * max(n, 1)
    attempts = 0
    batch = 256
    while len(placed) < n:
        cands = lo + rng.random((batch, 3)) * (hi - lo)
        if len(planes):
            clear = (((cands[:, None, :] - P[None]) * N[None]).sum(axis=2) >= r).all(axis=1)
        else:
            clear = np.ones(batch, dtype=bool)
        for c, ok in zip(cands, clear):
            attempts += 1
            if attempts > max_attempts:
                raise InfeasibleConfiguration(
                    f"placed only {len(placed)} of {n} particles after {max_attempts} attempts"
                )
            if not ok:
                continue
            key = tuple(int(v) for v in c // D)
            hit = False
            for dx in (-1, 0, 1):
                for dy in (-1, 0, 1):
                    for dz in (-1, 0, 1):
                        for idx in buckets.get((key[0] + dx, key[1] + dy, key[2] + dz), ()):
                            if np.sum((placed[idx] - c) ** 2) < D * D:
                                hit = True
                                break
                        if hit:
                            break
                    if hit:
                        break
                if hit:
                    break
            if hit:
                continue
            buckets.setdefault(key, []).append(len(placed))
            placed.append(c)
            if len(placed) == n:
                break

    centers = np.array(placed, dtype=float).reshape(-1, 3)
    return ParticleScene(
        centers=centers,
        velocities=np.zeros_like(centers),
        settled=np.zeros(len(centers), dtype=bool),
        moved=np.zeros(len(centers), dtype=bool),
        diameter=float(D),
        extent=tuple(float(e) for e in config.extent),
        planes=planes,
        settling_speed=config.settling_speed,
    )


def step_scene(scene: ParticleScene, dt: float = 1.0) -> ParticleScene:
    """Advance the kinematic settling model by ``dt`` time steps in one update.

    Awake spheres sink by ``settling_speed * dt`` scaled down by local
    crowding. Spheres whose target position is clear of everything move in
    bulk; the rest are resolved one by one from the bottom up, pushed out of
    planes and neighbours along the contact normals, and keep their old
    position when the push would lift them or leave an overlap beyond the
    tolerance. A sphere that barely sank, or touches the floor, is settled
    and sleeps until a neighbour moves.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    n = scene.n
    if n == 0:
        return scene
    D = scene.diameter
    r = D / 2
    contact = D * (1 - scene.overlap_tol / 2)
    minimum = D * (1 - scene.overlap_tol)
    old = np.array(scene.centers)
    pos = old.copy()

    tree = cKDTree(old)
    if scene.moved.any():
        near_movers = tree.query_ball_point(old[scene.moved], 1.5 * D)
        woken = np.zeros(n, dtype=bool)
        for idx in near_movers:
            woken[idx] = True
    else:
        woken = np.zeros(n, dtype=bool)
    awake = ~scene.settled | woken
    if not awake.any():
        return replace(
            scene,
            velocities=np.zeros_like(old),
            settled=np.ones(n, dtype=bool),
            moved=np.zeros(n, dtype=bool),
        )

    crowd = np.asarray(tree.query_ball_point(old, 2 * D, return_length=True)) - 1
    # neighbour spheres within 2D occupy 1/64 of that ball each
    local_fraction = np.minimum(crowd / 64.0, MAX_PACKING)
    factor = np.maximum(MIN_SPEED_FACTOR, 1 - local_fraction / MAX_PACKING)
    request = np.where(awake, scene.settling_speed * dt * factor, 0.0)
    proposal = old.copy()
    proposal[:, 2] -= request

    points, normals = _constraints(scene)
    offsets = (points * normals).sum(axis=1)
    clear = (((proposal[:, None, :] - points[None]) * normals[None]).sum(axis=2) >= r).all(axis=1)
    free = awake & clear
    pairs = tree.query_pairs(contact + 2 * float(request.max()), output_type="ndarray")
    if len(pairs):
        a, b = pairs[:, 0], pairs[:, 1]
        # drop the upper sphere of every clashing pair until the bulk move is consistent
        upper = np.where((old[a, 2] > old[b, 2]) | ((old[a, 2] == old[b, 2]) & (a > b)), a, b)
        while True:
            pa = np.where(free[a, None], proposal[a], old[a])
            pb = np.where(free[b, None], proposal[b], old[b])
            clash = (free[a] | free[b]) & (np.linalg.norm(pa - pb, axis=1) < contact)
            if not clash.any():
                break
            drop = np.where(free[upper[clash]], upper[clash], np.where(free[a[clash]], a[clash], b[clash]))
            free[drop] = False
    pos[free] = proposal[free]

    pending = np.flatnonzero(awake & ~free)
    pending = pending[np.lexsort((pending, old[pending, 2]))]
    reach = 2 * D + 2 * float(request.max())
    local = tree.query_ball_point(old[pending], reach) if len(pending) else []
    for i, near in zip(pending, local):
        near = np.array([j for j in near if j != i], dtype=np.intp)
        target = _resolve(proposal[i], pos[near], normals, offsets, r, contact)
        # a target this far away could meet spheres outside the local set
        if target[2] > old[i, 2] or np.linalg.norm(target - old[i]) > r:
            continue
        if np.any(normals @ target - offsets < r - 1e-9):
            continue
        if len(near):
            gap = pos[near] - target
            if np.einsum("ij,ij->i", gap, gap).min() < (minimum - 1e-9) ** 2:
                continue
        pos[i] = target

    descent = old[:, 2] - pos[:, 2]
    settled = ~awake & scene.settled
    settled |= awake & ((descent < 0.1 * request) | (pos[:, 2] - r <= 1e-9))
    # sub-threshold creep does not wake neighbours
    moved = np.linalg.norm(pos - old, axis=1) > WAKE_DISTANCE * D
    return replace(
        scene,
        centers=pos,
        velocities=(pos - old) / dt,
        settled=settled,
        moved=moved,
    )


def _resolve(target, others, normals, offsets, r, contact, max_iters=6):
    # push along all violated contact normals at once, a few sweeps at most
    contact2 = contact * contact
    for _ in range(max_iters):
        depth = r - (normals @ target - offsets)
        shift = depth.clip(0.0) @ normals
        if len(others):
            v = target - others
            d2 = np.einsum("ij,ij->i", v, v)
            hit = d2 < contact2
            if hit.any():
                dv, dd = v[hit], np.sqrt(d2[hit])
                safe = dd > 0
                # coincident centres are pushed straight up
                dirs = np.where(safe[:, None], dv / np.where(safe, dd, 1.0)[:, None], _UP)
                shift = shift + (contact - dd) @ dirs
        if not shift.any():
            break
        target = target + shift
    return target


_UP = np.array([0.0, 0.0, 1.0])


def run_scene(scene: ParticleScene, steps: int, update: int) -> ParticleScene:
    """Advance ``steps`` time steps using updates of at most ``update`` steps."""
    done = 0
    while done < steps:
        dt = min(update, steps - done)
        scene = step_scene(scene, dt)
        done += dt
    return scene


def extract_block_quantities(
    scene: ParticleScene, grid: BlockGrid, config: ScenarioConfig
) -> list[BlockQuantities]:
    """Per-block quantities, indexed by block id.

    Cells count as solid when their centre lies strictly inside a sphere or
    on the solid side of a plane. A fluid cell is near-boundary when one of
    its 18 stencil neighbours is solid; neighbours outside the grid are not.
    """
    nx, ny, nz = grid.dims
    b = grid.block_size
    Lx, Ly, Lz = grid.extent
    xs = np.arange(Lx) + 0.5
    ys = np.arange(Ly) + 0.5
    F = np.zeros((nx, ny, nz), dtype=np.int64)
    B = np.zeros((nx, ny, nz), dtype=np.int64)
    r = scene.radius
    centers = scene.centers

    for k in range(nz):
        z0 = max(0, k * b - 1)
        z1 = min(Lz, (k + 1) * b + 1)
        solid = _solid_planes_mask(scene.planes, xs, ys, np.arange(z0, z1) + 0.5)
        if scene.n:
            hit = (centers[:, 2] + r > z0) & (centers[:, 2] - r < z1)
            for c in centers[hit]:
                _mark_sphere(solid, c, r, z0)
        fluid = ~solid
        near = np.zeros_like(solid)
        padded = np.pad(solid, 1, constant_values=False)
        sx, sy, sz = solid.shape
        for dx, dy, dz in STENCIL:
            near |= padded[1 + dx : 1 + dx + sx, 1 + dy : 1 + dy + sy, 1 + dz : 1 + dz + sz]
        near &= fluid
        lo = k * b - z0
        f = fluid[:, :, lo : lo + b].reshape(nx, b, ny, b, b)
        nb = near[:, :, lo : lo + b].reshape(nx, b, ny, b, b)
        F[:, :, k] = f.sum(axis=(1, 3, 4))
        B[:, :, k] = nb.sum(axis=(1, 3, 4))

    n_blocks = grid.n_blocks
    P_L = np.zeros(n_blocks, dtype=np.int64)
    P_S = np.zeros(n_blocks, dtype=np.int64)
    K = np.zeros(n_blocks, dtype=np.int64)
    dims = np.array(grid.dims)
    if scene.n:
        home = np.clip(np.floor(centers / b).astype(int), 0, dims - 1)
        home_ids = home[:, 0] + nx * (home[:, 1] + ny * home[:, 2])
        np.add.at(P_L, home_ids, 1)
        lo_blk = np.clip(np.floor((centers - r) / b).astype(int), 0, dims - 1)
        hi_blk = np.clip(np.ceil((centers + r) / b).astype(int) - 1, 0, dims - 1)
        for s in range(scene.n):
            for kk in range(lo_blk[s, 2], hi_blk[s, 2] + 1):
                for jj in range(lo_blk[s, 1], hi_blk[s, 1] + 1):
                    for ii in range(lo_blk[s, 0], hi_blk[s, 0] + 1):
                        bid = ii + nx * (jj + ny * kk)
                        if bid != home_ids[s]:
                            P_S[bid] += 1
        pairs = cKDTree(centers).query_pairs(scene.diameter, output_type="ndarray")
        if len(pairs):
            d = np.linalg.norm(centers[pairs[:, 0]] - centers[pairs[:, 1]], axis=1)
            pairs = pairs[d < scene.diameter]
            mid = (centers[pairs[:, 0]] + centers[pairs[:, 1]]) / 2
            cell = np.clip(np.floor(mid / b).astype(int), 0, dims - 1)
            np.add.at(K, cell[:, 0] + nx * (cell[:, 1] + ny * cell[:, 2]), 1)

    # (i, j, k) arrays to id order: k-major, then j, then i
    F_ids = F.transpose(2, 1, 0).ravel()
    B_ids = B.transpose(2, 1, 0).ravel()
    C = grid.cells_per_block
    return [
        BlockQuantities(
            C=C,
            F=int(F_ids[bid]),
            B=int(B_ids[bid]),
            P_L=int(P_L[bid]),
            P_S=int(P_S[bid]),
            K=int(K[bid]),
            S=config.sub_cycles,
        )
        for bid in range(n_blocks)
    ]


def _mark_sphere(solid: np.ndarray, c: np.ndarray, r: float, z0: int) -> None:
    # cells of the sphere's bounding box whose centre lies inside it
    lo = np.maximum(np.ceil(c - r - 0.5).astype(int), 0)
    hi = np.floor(c + r - 0.5).astype(int) + 1
    hi = np.minimum(hi, [solid.shape[0], solid.shape[1], z0 + solid.shape[2]])
    lo[2] = max(lo[2], z0)
    if np.any(hi <= lo):
        return
    xs = np.arange(lo[0], hi[0]) + 0.5 - c[0]
    ys = np.arange(lo[1], hi[1]) + 0.5 - c[1]
    zs = np.arange(lo[2], hi[2]) + 0.5 - c[2]
    inside = (xs**2)[:, None, None] + (ys**2)[None, :, None] + (zs**2)[None, None, :] < r * r
    solid[lo[0] : hi[0], lo[1] : hi[1], lo[2] - z0 : hi[2] - z0] |= inside


def record_trace(
    config: ScenarioConfig, n_snapshots: int, scene: ParticleScene | None = None
) -> list[tuple[int, list[BlockQuantities]]]:
    """Block quantities at ``n_snapshots + 1`` evenly spaced steps over the duration."""
    grid = config.grid
    scene = init_scene(config) if scene is None else scene
    update = config.update_steps()
    trace = []
    step = 0
    for s in range(n_snapshots + 1):
        target = int(round(s * config.duration / max(n_snapshots, 1)))
        scene = run_scene(scene, target - step, update)
        step = target
        trace.append((step, extract_block_quantities(scene, grid, config)))
    return trace


def synthesize_timings(
    quantities: Mapping[int, BlockQuantities] | Sequence[BlockQuantities],
    truth: EstimatorCoefficients,
    noise_sigma: float = 0.0,
    seed: int = 0,
    step: int = 0,
) -> list[TimingSample]:
    """Timing samples ``m_X = max(0, WL_X * (1 + eps))`` with independent Gaussian eps per part."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    if isinstance(quantities, Mapping):
        items = sorted(quantities.items())
    else:
        items = list(enumerate(quantities))
    return _synthesize([(bid, step, q) for bid, q in items], truth, noise_sigma, seed)


def synthesize_trace(
    trace: Sequence[tuple[int, Sequence[BlockQuantities]]],
    truth: EstimatorCoefficients,
    noise_sigma: float = 0.0,
    seed: int = 0,
) -> list[TimingSample]:
    """Like :func:`synthesize_timings` over every snapshot of a trace, one noise stream."""
    if noise_sigma < 0:
        raise ValueError("noise_sigma must be non-negative")
    records = [(bid, step, q) for step, qs in trace for bid, q in enumerate(qs)]
    return _synthesize(records, truth, noise_sigma, seed)


def _synthesize(records, truth, noise_sigma, seed):
    if not records:
        return []
    Q = quantity_matrix(q for _, _, q in records)
    rng = np.random.default_rng(seed)
    eps = rng.normal(0.0, 1.0, size=(len(records), len(PARTS))) * noise_sigma
    timings = np.column_stack(
        [
            np.maximum(0.0, (part_features(part, Q) @ truth.part(part)) * (1 + eps[:, i]))
            for i, part in enumerate(PARTS)
        ]
    )
    return [
        TimingSample(q, *map(float, timings[row]), block_id=bid, step=step)
        for row, (bid, step, q) in enumerate(records)
    ]
