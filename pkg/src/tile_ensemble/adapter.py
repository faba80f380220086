"""Binary request/response framing over an external process's stdin/stdout.

ENH1 (enhancer), all little-endian::

    request   b"ENH1" | u32 D | u32 channels | f32 gain | D*D*channels f32 (channel-planar LAB)
    response  b"ENH1" | u32 D | u32 channels | D*D*channels f32

SCL1 (scale predictor)::

    request   b"SCL1" | u32 height | u32 width | u32 channels | H*W*channels f32 (channel-planar LAB)
    response  b"SCL1" | u32 height | u32 width | u32 1 | H*W f32 long-scale probability

On start-up a server writes its 4-byte magic once as a readiness banner. Requests on
one connection are strictly serial: one response per request, in order.
"""
from __future__ import annotations

import contextlib
import os
import queue
import select
import shlex
import struct
import subprocess
import threading
import time

import numpy as np

from .enhancers import Enhancer, EnhancerSpec
from .errors import (
    AdapterExitError,
    AdapterShapeError,
    AdapterTimeoutError,
    MalformedFrameError,
)

ENH_MAGIC = b"ENH1"
SCL_MAGIC = b"SCL1"
ENH_REQUEST = struct.Struct("<4sIIf")
ENH_RESPONSE = struct.Struct("<4sII")
SCL_HEADER = struct.Struct("<4sIII")


def to_planar(data: np.ndarray) -> bytes:
    return np.ascontiguousarray(np.transpose(data, (2, 0, 1)), dtype="<f4").tobytes()


def from_planar(payload: bytes, height: int, width: int, channels: int) -> np.ndarray:
    planar = np.frombuffer(payload, dtype="<f4").reshape(channels, height, width)
    return np.transpose(planar, (1, 2, 0)).astype(np.float64)


def encode_enh_request(lab: np.ndarray, gain: float) -> bytes:
    d, _, c = lab.shape
    return ENH_REQUEST.pack(ENH_MAGIC, d, c, gain) + to_planar(lab)


def encode_enh_response(lab: np.ndarray) -> bytes:
    d, _, c = lab.shape
    return ENH_RESPONSE.pack(ENH_MAGIC, d, c) + to_planar(lab)


def encode_scl_request(lab: np.ndarray) -> bytes:
    h, w, c = lab.shape
    return SCL_HEADER.pack(SCL_MAGIC, h, w, c) + to_planar(lab)


def encode_scl_response(prob: np.ndarray) -> bytes:
    h, w = prob.shape
    return SCL_HEADER.pack(SCL_MAGIC, h, w, 1) + to_planar(prob[:, :, None])


class Connection:
    """One external process; a strictly serial request/response channel."""

    def __init__(self, cmd, magic: bytes, timeout: float = 30.0):
        argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self.magic = magic
        self.timeout = timeout
        try:
            self.proc = subprocess.Popen(argv, stdin=subprocess.PIPE, stdout=subprocess.PIPE)
        except OSError as exc:
            raise AdapterExitError(f"cannot launch {argv!r}: {exc}") from exc
        self._fd = self.proc.stdout.fileno()
        banner = self.read_exact(len(magic), at_frame_start=True)
        if banner != magic:
            self.close()
            raise MalformedFrameError(f"expected handshake {magic!r}, got {banner!r}")

    def read_exact(self, n: int, at_frame_start: bool = False) -> bytes:
        deadline = time.monotonic() + self.timeout
        buf = bytearray()
        while len(buf) < n:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                self.close(grace=0.0)
                raise AdapterTimeoutError(f"no response within {self.timeout:g} s")
            ready, _, _ = select.select([self._fd], [], [], remaining)
            if not ready:
                continue
            chunk = os.read(self._fd, n - len(buf))
            if not chunk:
                code = self.proc.poll()
                self.close()
                if at_frame_start and not buf:
                    raise AdapterExitError(f"external process closed its output (exit status {code})")
                raise MalformedFrameError(f"short frame: got {len(buf)} of {n} bytes")
            buf.extend(chunk)
        return bytes(buf)

    def send(self, frame: bytes) -> None:
        try:
            self.proc.stdin.write(frame)
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            code = self.proc.poll()
            self.close()
            raise AdapterExitError(f"external process is gone (exit status {code})") from exc

    def read_header(self, header: struct.Struct):
        raw = self.read_exact(4, at_frame_start=True)
        if raw != self.magic:
            self.close()
            raise MalformedFrameError(f"bad frame magic {raw!r}, expected {self.magic!r}")
        raw += self.read_exact(header.size - 4)
        return header.unpack(raw)[1:]

    def enhance(self, lab: np.ndarray, gain: float) -> np.ndarray:
        d, _, c = lab.shape
        self.send(encode_enh_request(lab, gain))
        rd, rc = self.read_header(ENH_RESPONSE)
        if (rd, rc) != (d, c):
            self.close()
            raise AdapterShapeError(f"response is {rd}x{rd}x{rc}, request was {d}x{d}x{c}")
        return from_planar(self.read_exact(d * d * c * 4), d, d, c)

    def predict_scale(self, lab: np.ndarray) -> np.ndarray:
        h, w, _ = lab.shape
        self.send(encode_scl_request(lab))
        rh, rw, rc = self.read_header(SCL_HEADER)
        if (rh, rw, rc) != (h, w, 1):
            self.close()
            raise AdapterShapeError(f"scale response is {rh}x{rw}x{rc}, expected {h}x{w}x1")
        return from_planar(self.read_exact(h * w * 4), h, w, 1)[:, :, 0]

    def close(self, grace: float = 2.0) -> None:
        """Close stdin and give the process ``grace`` seconds to exit before killing it."""
        proc = self.proc
        if proc.poll() is None:
            with contextlib.suppress(OSError):
                proc.stdin.close()
            try:
                proc.wait(timeout=grace)
            except subprocess.TimeoutExpired:
                proc.kill()
                proc.wait()
        for stream in (proc.stdin, proc.stdout):
            with contextlib.suppress(OSError):
                stream.close()


class ConnectionPool:
    """Up to ``size`` connections, opened lazily; a connection serves one caller at a time."""

    def __init__(self, cmd, magic: bytes, size: int = 1, timeout: float = 30.0):
        self.cmd, self.magic, self.size, self.timeout = cmd, magic, max(1, size), timeout
        self._idle: queue.Queue = queue.Queue()
        self._all: list[Connection] = []
        self._lock = threading.Lock()

    def _acquire(self) -> Connection:
        while True:
            try:
                return self._idle.get_nowait()
            except queue.Empty:
                pass
            with self._lock:
                if len(self._all) < self.size:
                    conn = Connection(self.cmd, self.magic, self.timeout)
                    self._all.append(conn)
                    return conn
            try:
                return self._idle.get(timeout=0.05)
            except queue.Empty:
                continue

    @contextlib.contextmanager
    def connection(self):
        conn = self._acquire()
        try:
            yield conn
        except BaseException:
            conn.close()
            with self._lock:
                if conn in self._all:
                    self._all.remove(conn)
            raise
        self._idle.put(conn)

    def close(self) -> None:
        with self._lock:
            for conn in self._all:
                conn.close()
            self._all.clear()


class ExternalEnhancer(Enhancer):
    def __init__(self, spec: EnhancerSpec, connections: int = 1):
        super().__init__(spec)
        self.pool = ConnectionPool(spec.cmd, ENH_MAGIC, connections, spec.timeout)

    def run(self, lab, gain, index):
        with self.pool.connection() as conn:
            return conn.enhance(lab, gain)

    def close(self):
        self.pool.close()


def external_enhance(cmd, tile, gain: float, timeout: float = 30.0):
    """Send one tile through a freshly launched enhancer process."""
    with ExternalEnhancer(EnhancerSpec.external(cmd, gain=gain, timeout=timeout)) as enh:
        return enh(tile, gain)
