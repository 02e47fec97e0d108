"""Run-state machine around a kernel: pause/step/resume, injection, replay."""

import json
import threading
import time
from collections import deque
from pathlib import Path

from .config import load
from .kernel import Kernel, SimError
from .netbase import InjectSend, Link

PAUSED = "paused"
RUNNING = "running"
DONE = "done"

MUTATING_OPS = ("load", "run", "pause", "resume", "step", "set_delay",
                "set_stop_time", "set_debug", "inject_send", "fail_link",
                "repair_link")


class Session:
    """Owns one kernel; commands are applied only between event dispatches."""

    def __init__(self, kernel: Kernel, config_name: str = "",
                 record: bool = False, sleep=time.sleep):
        self.kernel = kernel
        self.config_name = config_name
        self.state = PAUSED
        self.delay_ms = 0.0
        self.dispatch_count = 0
        self.recording: list | None = [] if record else None
        self._sleep = sleep
        self._queue: deque = deque()
        self._wake = threading.Event()
        self._closed = False
        self.on_status = None  # callback(status dict) after state changes

    # -- command surface -------------------------------------------------------

    def submit(self, cmd: dict, on_done=None):
        """Queue a command; the run loop applies it between dispatches."""
        self._queue.append((cmd, on_done))
        self._wake.set()

    def execute(self, cmd: dict) -> dict:
        """Apply a command now. Only call from the thread driving the loop."""
        op = cmd.get("op")
        at = self.dispatch_count  # step advances the count while applying
        try:
            result = self._apply(cmd)
        except SimError as exc:
            return {"ok": False, "error": str(exc)}
        if self.recording is not None and op in MUTATING_OPS:
            self.recording.append((at, dict(cmd)))
        return result

    def _apply(self, cmd: dict) -> dict:
        op = cmd.get("op")
        if op == "run" or op == "resume":
            if self.state != DONE:
                self.state = RUNNING
            self._notify()
            return {"ok": True, "state": self.state}
        if op == "pause":
            if self.state == RUNNING:
                self.state = PAUSED
            self._notify()
            return {"ok": True, "state": self.state}
        if op == "step":
            # single-step only acts while paused
            if self.state != PAUSED:
                return {"ok": True, "state": self.state, "stepped": False}
            stepped = self._dispatch_one()
            return {"ok": True, "state": self.state, "stepped": stepped}
        if op == "set_delay":
            self.delay_ms = max(0.0, float(cmd["ms"]))
            self._notify()
            return {"ok": True, "delay": self.delay_ms}
        if op == "set_stop_time":
            value = float(cmd["t"])
            if value < self.kernel.now:
                raise SimError(f"stop_time {value!r} is in the past")
            self.kernel.stop_time = value
            if self.state == DONE:
                self.state = PAUSED
            self._notify()
            return {"ok": True, "stop_time": value}
        if op == "set_debug":
            level = int(cmd["level"])
            if not 0 <= level <= 3:
                raise SimError(f"debug level {level!r} out of range 0..3")
            self.kernel.debug_level = level
            self._notify()
            return {"ok": True, "debug_level": level}
        if op == "inject_send":
            comp = cmd["comp"]
            size = cmd.get("size_bits")
            data = cmd.get("data")
            if isinstance(data, str):
                data = data.encode()
            self.kernel.schedule(comp, 0.0, InjectSend(size, data))
            if self.state == DONE:
                self.state = PAUSED
            return {"ok": True}
        if op in ("fail_link", "repair_link"):
            comp = self.kernel.component(cmd["link"])
            if not isinstance(comp, Link):
                raise SimError(f"{cmd['link']!r} is not a link")
            comp.set_up(op == "repair_link")
            return {"ok": True, "up": comp.up}
        if op == "snapshot":
            return {"ok": True, "snapshot": self.snapshot()}
        if op == "load":
            return self._load(cmd["path"])
        raise SimError(f"unknown op {op!r}")

    def _load(self, path: str) -> dict:
        text = Path(path).read_text()
        fresh = Kernel(seed=self.kernel.seed, stop_time=self.kernel.stop_time,
                       debug_level=self.kernel.debug_level)
        for sink in self.kernel.tracer.sinks:
            fresh.tracer.add_sink(sink)
        load(text, fresh)
        self.kernel = fresh
        self.config_name = path
        self.state = PAUSED
        self.dispatch_count = 0
        self._notify()
        return {"ok": True, "components": sorted(fresh.components)}

    # -- dispatch loop ----------------------------------------------------------

    def _dispatch_one(self) -> bool:
        if self.kernel.step() is None:
            # exhausted heap means done; a future event only awaits stop_time
            self.state = DONE if self.kernel.peek_time() is None else PAUSED
            self._notify()
            return False
        self.dispatch_count += 1
        return True

    def _drain(self):
        while self._queue:
            cmd, on_done = self._queue.popleft()
            result = self.execute(cmd)
            if on_done is not None:
                on_done(result)

    def loop(self):
        """Drive the kernel, draining the command queue between dispatches."""
        while not self._closed:
            self._drain()
            if self.state == RUNNING:
                if self._dispatch_one() and self.delay_ms:
                    # wall-clock pacing only; simulated time is untouched
                    self._sleep(self.delay_ms / 1000.0)
            else:
                if self._wake.wait(timeout=0.05):
                    self._wake.clear()

    def run_to_completion(self):
        """Batch mode: run until stop_time or exhaustion."""
        self.state = RUNNING
        while self.state == RUNNING:
            self._drain()
            if self.state == RUNNING:
                if self._dispatch_one() and self.delay_ms:
                    self._sleep(self.delay_ms / 1000.0)

    def close(self):
        self._closed = True
        self._wake.set()

    # -- introspection ----------------------------------------------------------

    def status(self) -> dict:
        stop = self.kernel.stop_time
        return {
            "filename": self.config_name,
            # JSON has no Infinity; an unbounded stop time serializes as null
            "stop_time": None if stop == float("inf") else stop,
            "delay": self.delay_ms,
            "debug_level": self.kernel.debug_level,
            "sim_time": self.kernel.now,
            "run_state": self.state,
        }

    def snapshot(self) -> dict:
        """Topology plus every component's state, enough to render from scratch."""
        links = {}
        components = {}
        for cid, comp in sorted(self.kernel.components.items()):
            state = comp.snapshot()
            components[cid] = {"kind": type(comp).__name__, "state": state}
            if isinstance(comp, Link):
                links[cid] = {"a": comp.endpoint_a, "b": comp.endpoint_b,
                              "up": comp.up}
            elif getattr(comp, "is_medium", False):
                links[cid] = {"stations": [p.peer_id for p in comp.ports],
                              "up": True}
        return {"status": self.status(), "components": components,
                "links": links}

    def _notify(self):
        if self.on_status is not None:
            self.on_status(self.status())


def save_script(script: list, path):
    """Persist recorded (dispatch_count, command) pairs as JSON lines."""
    with open(path, "w") as fh:
        for count, cmd in script:
            fh.write(json.dumps([count, cmd]) + "\n")


def load_script(path) -> list:
    script = []
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if line:
                count, cmd = json.loads(line)
                script.append((int(count), cmd))
    return script


def replay(session: Session, script: list):
    """Re-apply a recorded command script at the same event-count offsets."""
    pending = sorted(script, key=lambda item: item[0])
    idx = 0
    while True:
        while idx < len(pending) and pending[idx][0] == session.dispatch_count:
            session.execute(pending[idx][1])
            idx += 1
        if session.state != RUNNING:
            if idx < len(pending):
                raise SimError(
                    f"replay stalled at {session.dispatch_count} events "
                    f"awaiting command #{idx} at {pending[idx][0]}")
            break
        before = session.dispatch_count
        session._dispatch_one()
        if session.dispatch_count == before and session.state == RUNNING:
            raise SimError("replay made no progress while running")
