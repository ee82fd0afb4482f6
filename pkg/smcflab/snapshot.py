#    Licensed under the Apache License, Version 2.0 (the "License"); you may
#    not use this file except in compliance with the License. You may obtain
#    a copy of the License at
#
#         http://www.apache.org/licenses/LICENSE-2.0
#
#    Unless required by applicable law or agreed to in writing, software
#    distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
#    WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
#    License for the specific language governing permissions and limitations
#    under the License.

"""Binary snapshot files holding one state.

Layout, all little-endian:

=========  ===========================================
bytes      contents
=========  ===========================================
4          magic ``SMCF``
4          format version, unsigned
4          dimension d, unsigned
4 * d      points per axis, unsigned
8          box length, float64
8          time, float64
16 * n^d   samples as complex128 (real, imag), row-major
=========  ===========================================

"""

import logging
import os.path
import struct

import numpy as np

from smcflab import grid

LOG = logging.getLogger(__name__)

MAGIC = b"SMCF"
VERSION = 1
_PREFIX = struct.Struct("<4sII")
_TAIL = struct.Struct("<dd")
_DTYPE = np.dtype("<c16")


class SnapshotFormatError(ValueError):
    "A snapshot file does not follow the expected layout."


def encode(field, t):
    spec = field.spec
    header = _PREFIX.pack(MAGIC, VERSION, spec.d)
    header += struct.pack("<{}I".format(spec.d), *spec.shape)
    header += _TAIL.pack(spec.length, float(t))
    return header + field.values.astype(_DTYPE).tobytes()


def decode(data, source="<bytes>"):
    "Return ``(field, t)`` from encoded bytes."
    if len(data) < _PREFIX.size:
        raise SnapshotFormatError("{}: truncated header".format(source))
    magic, version, d = _PREFIX.unpack_from(data, 0)
    if magic != MAGIC:
        raise SnapshotFormatError("{}: bad magic {!r}".format(source, magic))
    if version != VERSION:
        raise SnapshotFormatError(
            "{}: unsupported format version {}".format(source, version)
        )
    if d not in (1, 2, 3):
        raise SnapshotFormatError("{}: bad dimension {}".format(source, d))
    offset = _PREFIX.size
    axes_format = "<{}I".format(d)
    if len(data) < offset + struct.calcsize(axes_format) + _TAIL.size:
        raise SnapshotFormatError("{}: truncated header".format(source))
    shape = struct.unpack_from(axes_format, data, offset)
    offset += struct.calcsize(axes_format)
    if len(set(shape)) != 1:
        raise SnapshotFormatError(
            "{}: unequal points per axis {}".format(source, shape)
        )
    length, t = _TAIL.unpack_from(data, offset)
    offset += _TAIL.size
    try:
        spec = grid.GridSpec(d, shape[0], length)
    except ValueError as err:
        raise SnapshotFormatError("{}: {}".format(source, err))
    expected = spec.size * _DTYPE.itemsize
    payload = data[offset:]
    if len(payload) != expected:
        raise SnapshotFormatError(
            "{}: payload has {} bytes, expected {}".format(source, len(payload), expected)
        )
    values = np.frombuffer(payload, dtype=_DTYPE).reshape(spec.shape)
    return grid.Field(spec, values), t


def write_snapshot(path, field, t):
    """Write one state to ``path``.

    :param path: destination file
    :type path: str
    :param field: state to store
    :type field: smcflab.grid.Field
    :param t: time of the state
    :type t: float

    """
    path = os.path.expanduser(path)
    LOG.debug("writing snapshot t=%g to %s", t, path)
    with open(path, "wb") as f:
        f.write(encode(field, t))


def read_snapshot(path):
    "Return ``(field, t)`` stored in ``path``."
    path = os.path.expanduser(path)
    LOG.debug("reading snapshot %s", path)
    with open(path, "rb") as f:
        return decode(f.read(), source=path)
