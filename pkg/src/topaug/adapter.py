"""Line-delimited JSON bridge to external generator and parser processes.

Generator requests are ``{"id", "source", "k", "p", "seed"}`` and must be
answered with exactly ``k`` lines ``{"id", "candidate"}``.  Parser requests
are ``{"id", "utterance"}`` answered by one ``{"id", "tree"}`` line (``tree``
may be null).  Responses for a request are consecutive; their internal order
is free.  All requests are written up front by a feeder thread so a slow or
chatty child cannot deadlock the pipes.
"""
from __future__ import annotations

import json
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass
from typing import Iterable, Sequence

from .infill import DEFAULT_K, DEFAULT_P, SyntheticSample
from .rng import derive_seed
from .tree import (
    Form,
    GeneratorOutputRejected,
    Label,
    NonTerminal,
    RejectReason,
    TreeSyntaxError,
    extract_template,
    from_generator_output,
    parse_linearized,
    serialize,
    template_key,
    utterance_of,
)

DEFAULT_TIMEOUT = 60.0


class AdapterError(RuntimeError):
    """Base for adapter failures; ``partial`` holds results gathered so far."""

    def __init__(self, message: str, partial: list | None = None, request_id: int | None = None):
        super().__init__(message)
        self.partial = partial if partial is not None else []
        self.request_id = request_id


class AdapterCrashed(AdapterError):
    pass


class ProtocolViolation(AdapterError):
    pass


class AdapterTimeout(AdapterError):
    pass


_EOF = object()


@dataclass
class _Line:
    text: str


class AdapterSession:
    """One child process serving a batch of requests."""

    def __init__(self, cmd: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        self.timeout = timeout
        self.proc = subprocess.Popen(
            argv,
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.PIPE,
            text=True,
            encoding="utf-8",
            bufsize=1,
        )
        self._lines: queue.Queue = queue.Queue()
        self._stderr: list[str] = []
        threading.Thread(target=self._pump_stdout, daemon=True).start()
        threading.Thread(target=self._pump_stderr, daemon=True).start()

    def _pump_stdout(self) -> None:
        for line in self.proc.stdout:
            self._lines.put(_Line(line))
        self._lines.put(_EOF)

    def _pump_stderr(self) -> None:
        for line in self.proc.stderr:
            self._stderr.append(line)

    def send_all(self, requests: Iterable[dict]) -> None:
        def feed():
            try:
                for req in requests:
                    self.proc.stdin.write(json.dumps(req) + "\n")
                    self.proc.stdin.flush()
                self.proc.stdin.close()
            except (BrokenPipeError, OSError, ValueError):
                pass

        threading.Thread(target=feed, daemon=True).start()

    def read(self, request_id: int, partial: list) -> dict:
        try:
            item = self._lines.get(timeout=self.timeout)
        except queue.Empty:
            raise AdapterTimeout(
                f"no response for request {request_id} within {self.timeout}s", partial, request_id
            ) from None
        if item is _EOF:
            code = self.proc.wait()
            tail = "".join(self._stderr[-5:]).strip()
            if code != 0:
                raise AdapterCrashed(
                    f"adapter exited with status {code} during request {request_id}: {tail}", partial, request_id
                )
            raise ProtocolViolation(f"adapter closed its output during request {request_id}", partial, request_id)
        text = item.text.strip()
        try:
            obj = json.loads(text)
        except json.JSONDecodeError:
            raise ProtocolViolation(f"request {request_id}: malformed line {text[:80]!r}", partial, request_id) from None
        if not isinstance(obj, dict) or "id" not in obj:
            raise ProtocolViolation(f"request {request_id}: response without id", partial, request_id)
        if obj["id"] != request_id:
            raise ProtocolViolation(
                f"request {request_id}: short or out-of-order response (got id {obj['id']!r})", partial, request_id
            )
        return obj

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
        self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def external_generate(
    adapter_cmd: str | Sequence[str],
    templates: Sequence[NonTerminal],
    known_labels: set[Label],
    k: int = DEFAULT_K,
    p: float = DEFAULT_P,
    seed: int = 0,
    timeout: float = DEFAULT_TIMEOUT,
) -> list[SyntheticSample]:
    """Have an external process fill each template ``k`` times.

    Candidates are post-processed with ``from_generator_output``; rejected ones
    are kept in the output with their reason rather than aborting the run.  A
    candidate whose skeleton differs from its template is rejected as
    structural.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    keys = [template_key(t) for t in templates]
    requests = [
        {"id": i, "source": serialize(t, Form.GENERATOR_SOURCE), "k": k, "p": p, "seed": derive_seed(seed, key) & 0x7FFFFFFF}
        for i, (t, key) in enumerate(zip(templates, keys))
    ]
    gen_id = f"external:{adapter_cmd if isinstance(adapter_cmd, str) else ' '.join(adapter_cmd)}"
    out: list[SyntheticSample] = []
    with AdapterSession(adapter_cmd, timeout) as session:
        session.send_all(requests)
        for req, key in zip(requests, keys):
            for _ in range(k):
                obj = session.read(req["id"], out)
                candidate = obj.get("candidate")
                if not isinstance(candidate, str):
                    raise ProtocolViolation(f"request {req['id']}: missing 'candidate'", out, req["id"])
                try:
                    tree = from_generator_output(candidate, known_labels)
                except GeneratorOutputRejected as rej:
                    out.append(SyntheticSample(key, None, (), gen_id, seed, candidate, rej.reason.value))
                    continue
                if template_key(extract_template(tree)) != key:
                    out.append(SyntheticSample(key, None, (), gen_id, seed, candidate, RejectReason.STRUCTURAL.value))
                    continue
                out.append(SyntheticSample(key, tree, tuple(utterance_of(tree)), gen_id, seed, candidate))
    return out


class ExternalParser:
    """Parser callable backed by an adapter process; use ``parse_many`` for batches."""

    def __init__(self, cmd: str | Sequence[str], timeout: float = DEFAULT_TIMEOUT):
        self.cmd = cmd
        self.timeout = timeout

    def parse_many(self, utterances: Sequence[Sequence[str]]) -> list[NonTerminal | None]:
        requests = [{"id": i, "utterance": " ".join(u)} for i, u in enumerate(utterances)]
        out: list[NonTerminal | None] = []
        with AdapterSession(self.cmd, self.timeout) as session:
            session.send_all(requests)
            for req in requests:
                obj = session.read(req["id"], out)
                if "tree" not in obj:
                    raise ProtocolViolation(f"request {req['id']}: missing 'tree'", out, req["id"])
                text = obj["tree"]
                try:
                    out.append(parse_linearized(text) if text else None)
                except TreeSyntaxError:
                    out.append(None)
        return out

    def __call__(self, tokens: Sequence[str]) -> NonTerminal | None:
        return self.parse_many([tokens])[0]
