"""Reference servers for the ENH1/SCL1 protocols.

Run as ``python -m tile_ensemble.servers <mode> [arg]``. ``echo`` is the conformance
reference; the others exist to exercise the adapter's error paths.

Enhancer modes: echo, lgain, badshape, badmagic, short, crash, hang.
Scale modes: const-prob P, mean-l THRESHOLD, scl-badshape.
"""
from __future__ import annotations

import struct
import sys
import time

import numpy as np

from .adapter import (
    ENH_MAGIC,
    ENH_REQUEST,
    ENH_RESPONSE,
    SCL_HEADER,
    SCL_MAGIC,
    encode_enh_response,
    encode_scl_response,
    from_planar,
)


def _read(stream, n):
    buf = b""
    while len(buf) < n:
        chunk = stream.read(n - len(buf))
        if not chunk:
            return None
        buf += chunk
    return buf


def _enh_requests(stream):
    while True:
        head = _read(stream, ENH_REQUEST.size)
        if head is None:
            return
        magic, d, c, gain = ENH_REQUEST.unpack(head)
        if magic != ENH_MAGIC:
            sys.exit(3)
        payload = _read(stream, d * d * c * 4)
        if payload is None:
            return
        yield from_planar(payload, d, d, c), gain


def _scl_requests(stream):
    while True:
        head = _read(stream, SCL_HEADER.size)
        if head is None:
            return
        magic, h, w, c = SCL_HEADER.unpack(head)
        if magic != SCL_MAGIC:
            sys.exit(3)
        payload = _read(stream, h * w * c * 4)
        if payload is None:
            return
        yield from_planar(payload, h, w, c)


def lgain_transform(lab: np.ndarray, gain: float) -> np.ndarray:
    out = lab.copy()
    out[..., 0] *= gain
    return out


def mean_l_probability(lab: np.ndarray, threshold: float) -> float:
    return 1.0 if float(np.mean(lab[..., 0])) / 100.0 < threshold else 0.0


def serve(mode: str, arg: float | None = None, stdin=None, stdout=None) -> None:
    stdin = stdin or sys.stdin.buffer
    stdout = stdout or sys.stdout.buffer

    def emit(frame: bytes):
        stdout.write(frame)
        stdout.flush()

    if mode in ("const-prob", "mean-l", "scl-badshape"):
        emit(SCL_MAGIC)
        for lab in _scl_requests(stdin):
            h, w, _ = lab.shape
            if mode == "const-prob":
                emit(encode_scl_response(np.full((h, w), arg)))
            elif mode == "mean-l":
                emit(encode_scl_response(np.full((h, w), mean_l_probability(lab, arg))))
            else:
                emit(encode_scl_response(np.zeros((h + 1, w))))
        return

    emit(ENH_MAGIC)
    for lab, gain in _enh_requests(stdin):
        d, _, c = lab.shape
        if mode == "echo":
            emit(encode_enh_response(lab))
        elif mode == "lgain":
            emit(encode_enh_response(lgain_transform(lab, gain)))
        elif mode == "badshape":
            emit(encode_enh_response(np.zeros((d + 1, d + 1, c))))
        elif mode == "badmagic":
            emit(b"XXXX" + struct.pack("<II", d, c) + b"\0" * (d * d * c * 4))
        elif mode == "short":
            emit(ENH_RESPONSE.pack(ENH_MAGIC, d, c) + b"\0" * (d * d * c * 2))
            return
        elif mode == "crash":
            sys.exit(7)
        elif mode == "hang":
            time.sleep(3600)
        else:
            sys.exit(f"unknown mode {mode}")


def main(argv=None):
    argv = sys.argv[1:] if argv is None else argv
    if not argv:
        sys.exit(__doc__)
    arg = float(argv[1]) if len(argv) > 1 else None
    serve(argv[0], arg)


if __name__ == "__main__":
    main()
