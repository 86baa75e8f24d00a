"""Long-lived candidate child processes speaking newline-delimited JSON."""

from __future__ import annotations

import enum
import json
import logging
import math
import os
import select
import shutil
import subprocess
import sys
import tempfile
import threading
import time
from pathlib import Path

from ..types import Legality
from .legality import CandidateFailure

log = logging.getLogger(__name__)

RUNNER = Path(__file__).with_name("runner.py")
DEFAULT_CALL_TIMEOUT_MS = 2000
DEFAULT_STARTUP_TIMEOUT_MS = 10000

_live: dict[int, "CandidateHandle"] = {}
_live_lock = threading.Lock()


class SandboxConfigError(RuntimeError):
    """The runtime command itself is broken; not the candidate's fault."""


class HandleState(str, enum.Enum):
    STARTING = "Starting"
    READY = "Ready"
    FAILED = "Failed"
    CLOSED = "Closed"


def default_runtime_command() -> list[str]:
    return [sys.executable, str(RUNNER)]


def live_handle_count() -> int:
    with _live_lock:
        return len(_live)


def _all_finite(obj) -> bool:
    if isinstance(obj, bool):
        return True
    if isinstance(obj, (int, float)):
        return math.isfinite(obj)
    if isinstance(obj, dict):
        return all(_all_finite(v) for v in obj.values())
    if isinstance(obj, (list, tuple)):
        return all(_all_finite(v) for v in obj)
    return True


class CandidateHandle:
    def __init__(
        self,
        source: str,
        component_id: str,
        runtime_command: list[str] | None = None,
        call_timeout_ms: int = DEFAULT_CALL_TIMEOUT_MS,
        startup_timeout_ms: int = DEFAULT_STARTUP_TIMEOUT_MS,
    ):
        self.component_id = component_id
        self.call_timeout_ms = call_timeout_ms
        self.startup_timeout_ms = startup_timeout_ms
        self.state = HandleState.STARTING
        self.stderr_text = ""
        self._buf = bytearray()
        self._tmpdir = tempfile.mkdtemp(prefix="evostage-cand-")
        src_path = os.path.join(self._tmpdir, "candidate.py")
        with open(src_path, "w", encoding="utf-8") as fh:
            fh.write(source)
        cmd = list(runtime_command or default_runtime_command())
        if any("{source}" in part for part in cmd):
            cmd = [part.format(source=src_path, component=component_id) for part in cmd]
        else:
            cmd += [src_path, component_id]
        self._stderr_path = os.path.join(self._tmpdir, "stderr.txt")
        self._stderr = open(self._stderr_path, "wb")
        try:
            self.proc = subprocess.Popen(
                cmd, stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=self._stderr, cwd=self._tmpdir
            )
        except OSError as exc:
            self._stderr.close()
            shutil.rmtree(self._tmpdir, ignore_errors=True)
            self.state = HandleState.FAILED
            raise SandboxConfigError(f"cannot start runtime {cmd[0]!r}: {exc}") from exc
        with _live_lock:
            _live[self.proc.pid] = self

    @property
    def pid(self) -> int:
        return self.proc.pid

    def _read_line(self, timeout_s: float) -> bytes:
        fd = self.proc.stdout.fileno()
        deadline = time.monotonic() + timeout_s
        while b"\n" not in self._buf:
            remaining = deadline - time.monotonic()
            if remaining <= 0:
                raise TimeoutError
            ready, _, _ = select.select([fd], [], [], remaining)
            if not ready:
                raise TimeoutError
            chunk = os.read(fd, 1 << 16)
            if not chunk:
                raise EOFError
            self._buf += chunk
        idx = self._buf.index(b"\n")
        line = bytes(self._buf[:idx])
        del self._buf[: idx + 1]
        return line

    def _fail(self, tag: Legality, detail: str) -> CandidateFailure:
        self.state = HandleState.FAILED
        self._terminate()
        tail = self.stderr_text.strip().splitlines()[-5:]
        if tail:
            detail = detail + " | " + " / ".join(tail)
        return CandidateFailure(tag, detail)

    def handshake(self) -> None:
        try:
            line = self._read_line(self.startup_timeout_ms / 1000)
        except TimeoutError:
            raise self._fail(Legality.ILLEGAL_CODE, "handshake timed out") from None
        except EOFError:
            raise self._fail(Legality.ILLEGAL_CODE, "candidate failed to load") from None
        try:
            msg = json.loads(line)
        except ValueError:
            raise self._fail(Legality.ILLEGAL_CODE, f"bad handshake {line[:80]!r}") from None
        if msg != {"op": "hello", "component": self.component_id}:
            raise self._fail(Legality.ILLEGAL_CODE, f"unexpected handshake {msg!r}")
        self.state = HandleState.READY

    def call(self, request: dict) -> dict:
        if self.state is not HandleState.READY:
            raise RuntimeError(f"handle for {self.component_id} is {self.state.value}, not Ready")
        payload = (json.dumps(request, separators=(",", ":")) + "\n").encode()
        try:
            self.proc.stdin.write(payload)
            self.proc.stdin.flush()
        except (BrokenPipeError, OSError):
            raise self._fail(Legality.RUNTIME_FAILURE, "candidate closed its input") from None
        try:
            line = self._read_line(self.call_timeout_ms / 1000)
        except TimeoutError:
            raise self._fail(Legality.TIMEOUT, f"no reply within {self.call_timeout_ms} ms") from None
        except EOFError:
            raise self._fail(Legality.RUNTIME_FAILURE, "candidate exited mid-call") from None
        try:
            reply = json.loads(line)
        except ValueError:
            raise self._fail(Legality.RUNTIME_FAILURE, f"malformed reply {line[:80]!r}") from None
        if not isinstance(reply, dict):
            raise self._fail(Legality.RUNTIME_FAILURE, f"reply is not an object: {line[:80]!r}")
        if "error" in reply:
            raise self._fail(Legality.RUNTIME_FAILURE, str(reply["error"]))
        if not _all_finite(reply):
            raise self._fail(Legality.NON_FINITE, f"non-finite value in {line[:80]!r}")
        return reply

    def _terminate(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
        self._reap()

    def _reap(self) -> None:
        try:
            self.proc.wait(timeout=5)
        except subprocess.TimeoutExpired:  # pragma: no cover
            self.proc.kill()
            self.proc.wait()
        for stream in (self.proc.stdin, self.proc.stdout):
            try:
                stream.close()
            except OSError:
                pass
        self._stderr.close()
        try:
            with open(self._stderr_path, encoding="utf-8", errors="replace") as fh:
                # strip the temp directory so verdict details are reproducible
                self.stderr_text = fh.read().replace(self._tmpdir + os.sep, "")
        except OSError:
            pass
        if self.stderr_text:
            log.debug("candidate %s stderr:\n%s", self.component_id, self.stderr_text)
        shutil.rmtree(self._tmpdir, ignore_errors=True)
        with _live_lock:
            _live.pop(self.proc.pid, None)

    def close(self) -> None:
        if self.state is HandleState.CLOSED:
            return
        if self.proc.returncode is None and self.proc.poll() is None:
            try:
                self.proc.stdin.write(b'{"op":"bye"}\n')
                self.proc.stdin.flush()
                self.proc.wait(timeout=1)
            except (OSError, subprocess.TimeoutExpired):
                self.proc.kill()
        if _live.get(self.proc.pid) is self:
            self._reap()
        self.state = HandleState.CLOSED

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def spawn_candidate(
    source: str,
    component_id: str,
    runtime_command: list[str] | None = None,
    call_timeout_ms: int = DEFAULT_CALL_TIMEOUT_MS,
    startup_timeout_ms: int = DEFAULT_STARTUP_TIMEOUT_MS,
) -> CandidateHandle:
    """Start a candidate and wait for its handshake.

    Load failures raise CandidateFailure(IllegalCode); a missing interpreter
    raises SandboxConfigError.
    """
    handle = CandidateHandle(source, component_id, runtime_command, call_timeout_ms, startup_timeout_ms)
    try:
        handle.handshake()
    except CandidateFailure:
        handle.close()
        raise
    return handle


def call_candidate(handle: CandidateHandle, request: dict) -> dict:
    return handle.call(request)
