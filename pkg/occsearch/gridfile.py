"""
Binary voxel grid file format

All numbers little-endian:

    magic       4 bytes  b"OSVG"
    version     uint8    1
    dims        3 x uint32 (nx, ny, nz)
    resolution  float64  meters per voxel edge
    origin      3 x float64 world corner of voxel (0, 0, 0)
    payload     ceil(nx*ny*nz / 8) bytes

The payload packs one bit per voxel, x fastest then y then z, and the
first voxel of each byte in its least significant bit.
"""
import logging

import numpy as np
from construct.core import (
    ConstructError,
    Struct,
    Const,
    Int8ul,
    Int32ul,
    Float64l,
    Array,
    Bytes,
)

from .voxelcore import BinaryVoxelGrid

logger = logging.getLogger(__name__)

GRID_MAGIC = b"OSVG"

# Construct for a grid file
GRID_FILE = Struct(
    "magic" / Const(GRID_MAGIC),
    "version" / Const(1, Int8ul),
    "dims" / Array(3, Int32ul),
    "resolution" / Float64l,
    "origin" / Array(3, Float64l),
    "payload" / Bytes(lambda ctx: (ctx.dims[0] * ctx.dims[1] * ctx.dims[2] + 7) // 8),
)


def build_grid(grid):
    """
    Serialize a BinaryVoxelGrid
    Returns bytes
    """
    bits = np.ravel(grid.data, order="F").astype(np.uint8)
    payload = np.packbits(bits, bitorder="little").tobytes()
    return GRID_FILE.build({
        "dims": list(grid.dims),
        "resolution": grid.resolution,
        "origin": grid.origin.tolist(),
        "payload": payload,
    })


def parse_grid(data):
    """
    Parse bytes and return a BinaryVoxelGrid
    """
    try:
        parsed = GRID_FILE.parse(data)
    except ConstructError as e:
        raise ValueError("not a voxel grid file: {}".format(e))
    dims = tuple(int(d) for d in parsed.dims)
    count = dims[0] * dims[1] * dims[2]
    bits = np.unpackbits(np.frombuffer(parsed.payload, dtype=np.uint8),
                         bitorder="little")[:count]
    return BinaryVoxelGrid(dims, parsed.resolution, list(parsed.origin),
                           bits.reshape(dims, order="F").astype(bool))


def dump_grid(grid, path):
    with open(path, "wb") as f:
        f.write(build_grid(grid))
    logger.debug("wrote %s voxels to %s", grid.count(), path)


def load_grid(path):
    with open(path, "rb") as f:
        return parse_grid(f.read())
