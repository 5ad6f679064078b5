"""Occupancy grids: MovingAI map parsing, downscaling, and 4-connected adjacency."""

from __future__ import annotations

import numpy as np

# A cell is (x, y): column index, row index. y grows downward.
Cell = tuple[int, int]

PASSABLE_CHARS = frozenset(".GS")
BLOCKED_CHARS = frozenset("@OTW")

# Step order N, E, S, W; fixed so every traversal of a grid is deterministic.
STEPS: tuple[tuple[int, int], ...] = ((0, -1), (1, 0), (0, 1), (-1, 0))


class MapFormatError(ValueError):
    """Raised when map text does not follow the MovingAI layout."""


class GridMap:
    """Immutable occupancy grid with unit step costs and 4-connected moves.

    ``passable`` is a (height, width) bool array indexed ``[y, x]``.
    Queries outside the bounds report blocked instead of faulting.
    """

    def __init__(self, passable: np.ndarray):
        arr = np.asarray(passable, dtype=bool)
        if arr.ndim != 2 or arr.shape[0] == 0 or arr.shape[1] == 0:
            raise ValueError("passable must be a non-empty 2D array")
        self.passable = arr
        self.passable.setflags(write=False)
        self.height, self.width = arr.shape

    def __eq__(self, other) -> bool:
        return isinstance(other, GridMap) and np.array_equal(self.passable, other.passable)

    def __repr__(self) -> str:
        return f"GridMap({self.width}x{self.height})"

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def is_passable(self, cell: Cell) -> bool:
        """Passability of a cell; out-of-bounds cells count as blocked."""
        x, y = cell
        if not (0 <= x < self.width and 0 <= y < self.height):
            return False
        return bool(self.passable[y, x])

    def neighbors(self, cell: Cell) -> list[Cell]:
        """In-bounds passable neighbors of ``cell``, always in N, E, S, W order."""
        x, y = cell
        out = []
        for dx, dy in STEPS:
            nx, ny = x + dx, y + dy
            if 0 <= nx < self.width and 0 <= ny < self.height and self.passable[ny, nx]:
                out.append((nx, ny))
        return out

    def passable_cells(self) -> list[Cell]:
        ys, xs = np.nonzero(self.passable)
        return [(int(x), int(y)) for x, y in zip(xs, ys)]

    def to_movingai(self) -> str:
        """Serialize to MovingAI text ('.' passable, '@' blocked); parse round-trips."""
        rows = ["".join("." if p else "@" for p in row) for row in self.passable]
        header = f"type octile\nheight {self.height}\nwidth {self.width}\nmap\n"
        return header + "\n".join(rows) + "\n"


def _header_int(line: str, key: str) -> int:
    parts = line.split()
    if len(parts) != 2 or parts[0] != key:
        raise MapFormatError(f"expected '{key} <int>' header line, got {line!r}")
    try:
        value = int(parts[1])
    except ValueError:
        raise MapFormatError(f"non-integer {key} in header: {line!r}") from None
    if value <= 0:
        raise MapFormatError(f"{key} must be positive, got {value}")
    return value


def parse_movingai(text: str) -> GridMap:
    """Parse MovingAI map text into a :class:`GridMap`.

    Layout: ``type <octile>``, ``height H``, ``width W``, ``map``, then H rows
    of W terrain characters. Accepts LF and CRLF. Terrain ``. G S`` is
    passable and ``@ O T W`` is blocked (terrain cost differences are ignored;
    all step costs are 1).
    """
    lines = text.splitlines()
    if len(lines) < 4:
        raise MapFormatError("map text shorter than the four header lines")
    type_parts = lines[0].split()
    if len(type_parts) != 2 or type_parts[0] != "type":
        raise MapFormatError(f"expected 'type <name>' on line 1, got {lines[0]!r}")
    height = _header_int(lines[1], "height")
    width = _header_int(lines[2], "width")
    if lines[3].strip() != "map":
        raise MapFormatError(f"expected 'map' on line 4, got {lines[3]!r}")

    rows = [line for line in lines[4:] if line != ""]
    if len(rows) != height:
        raise MapFormatError(f"header declares height {height} but found {len(rows)} grid rows")
    passable = np.zeros((height, width), dtype=bool)
    for y, row in enumerate(rows):
        if len(row) != width:
            raise MapFormatError(f"row {y} has length {len(row)}, expected width {width}")
        for x, ch in enumerate(row):
            if ch in PASSABLE_CHARS:
                passable[y, x] = True
            elif ch in BLOCKED_CHARS:
                passable[y, x] = False
            else:
                raise MapFormatError(f"unknown terrain character {ch!r} at row {y}, column {x}")
    return GridMap(passable)


def downscale(grid: GridMap, target_w: int, target_h: int) -> GridMap:
    """Shrink ``grid`` to ``target_w`` x ``target_h`` by per-block majority vote.

    Each target cell covers a rectangular block of source cells obtained by
    even partitioning; the target cell is blocked iff strictly more than half
    of its covered source cells are blocked (a tie stays passable, which
    preserves narrow corridors).
    """
    if target_w <= 0 or target_h <= 0:
        raise ValueError("target dimensions must be positive")
    if target_w > grid.width or target_h > grid.height:
        raise ValueError(
            f"target {target_w}x{target_h} exceeds source {grid.width}x{grid.height}"
        )
    blocked = ~grid.passable
    out = np.zeros((target_h, target_w), dtype=bool)
    for ty in range(target_h):
        y0 = ty * grid.height // target_h
        y1 = (ty + 1) * grid.height // target_h
        for tx in range(target_w):
            x0 = tx * grid.width // target_w
            x1 = (tx + 1) * grid.width // target_w
            block = blocked[y0:y1, x0:x1]
            out[ty, tx] = int(block.sum()) * 2 <= block.size
    return GridMap(out)


def random_map(width: int, height: int, density: float = 0.2, seed: int = 0) -> GridMap:
    """Random occupancy grid with i.i.d. blocked cells at the given density."""
    if not 0.0 <= density < 1.0:
        raise ValueError("density must be in [0, 1)")
    rng = np.random.default_rng(seed)
    passable = rng.random((height, width)) >= density
    return GridMap(passable)
