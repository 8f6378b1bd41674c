"""Line-oriented message channels: TCP sockets and in-process pipes.

Both ends exchange complete newline-terminated lines. A channel supports
one reader and one writer; ``send_line`` writes a whole frame atomically,
``recv_line`` returns one frame without its terminator, ``None`` when the
timeout elapses first, and raises ChannelClosed once the peer is gone.
"""

from __future__ import annotations

import queue
import socket
import time

_EOF = object()


class ChannelClosed(ConnectionError):
    pass


class SocketChannel:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._buffer = bytearray()
        self._eof = False

    def send_line(self, line: bytes) -> None:
        try:
            self._sock.sendall(line)
        except OSError as exc:
            raise ChannelClosed(str(exc)) from None

    def recv_line(self, timeout: float | None = None) -> bytes | None:
        deadline = None if timeout is None else time.monotonic() + timeout
        while True:
            newline = self._buffer.find(b"\n")
            if newline >= 0:
                line = bytes(self._buffer[:newline])
                del self._buffer[: newline + 1]
                return line
            if self._eof:
                raise ChannelClosed("peer closed the connection")
            if deadline is None:
                self._sock.settimeout(None)
            else:
                remaining = deadline - time.monotonic()
                if remaining <= 0:
                    return None
                self._sock.settimeout(remaining)
            try:
                chunk = self._sock.recv(4096)
            except socket.timeout:
                return None
            except OSError as exc:
                raise ChannelClosed(str(exc)) from None
            if not chunk:
                self._eof = True
                continue
            self._buffer.extend(chunk)

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        self._sock.close()


class PipeChannel:
    """One end of an in-process duplex channel (see make_pipe)."""

    def __init__(self, inbox: queue.SimpleQueue, outbox: queue.SimpleQueue):
        self._inbox = inbox
        self._outbox = outbox
        self._closed = False
        self._peer_gone = False

    def send_line(self, line: bytes) -> None:
        if self._closed:
            raise ChannelClosed("channel closed")
        self._outbox.put(line)

    def recv_line(self, timeout: float | None = None) -> bytes | None:
        if self._peer_gone:
            raise ChannelClosed("peer closed the channel")
        try:
            item = self._inbox.get(timeout=timeout)
        except queue.Empty:
            return None
        if item is _EOF:
            self._peer_gone = True
            raise ChannelClosed("peer closed the channel")
        return item

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._outbox.put(_EOF)


def make_pipe() -> tuple[PipeChannel, PipeChannel]:
    a_to_b: queue.SimpleQueue = queue.SimpleQueue()
    b_to_a: queue.SimpleQueue = queue.SimpleQueue()
    return PipeChannel(b_to_a, a_to_b), PipeChannel(a_to_b, b_to_a)
