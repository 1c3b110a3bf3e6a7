"""Minimal ctypes binding over libmpg123 for in-memory mp3 decoding.

Uses the feed API: push the raw byte stream in, pull interleaved PCM out.
Output is forced to signed 16-bit so the caller gets one predictable format.
"""

from __future__ import annotations

import ctypes as C
import threading

_MPG123_OK = 0
_MPG123_NEED_MORE = -10
_MPG123_NEW_FORMAT = -11
_MPG123_DONE = -12
_MPG123_ENC_SIGNED_16 = 0xD0

_lib = None
_lib_lock = threading.Lock()


class Mpg123Unavailable(RuntimeError):
    pass


def _load():
    global _lib
    with _lib_lock:
        if _lib is not None:
            return _lib
        try:
            lib = C.CDLL("libmpg123.so.0")
        except OSError as exc:
            raise Mpg123Unavailable(f"libmpg123 not loadable: {exc}") from exc
        lib.mpg123_init()
        lib.mpg123_new.restype = C.c_void_p
        lib.mpg123_new.argtypes = [C.c_char_p, C.POINTER(C.c_int)]
        lib.mpg123_delete.argtypes = [C.c_void_p]
        lib.mpg123_open_feed.argtypes = [C.c_void_p]
        lib.mpg123_close.argtypes = [C.c_void_p]
        lib.mpg123_feed.argtypes = [C.c_void_p, C.c_char_p, C.c_size_t]
        lib.mpg123_read.argtypes = [C.c_void_p, C.c_char_p, C.c_size_t, C.POINTER(C.c_size_t)]
        lib.mpg123_getformat.argtypes = [
            C.c_void_p, C.POINTER(C.c_long), C.POINTER(C.c_int), C.POINTER(C.c_int)]
        lib.mpg123_format_none.argtypes = [C.c_void_p]
        lib.mpg123_format.argtypes = [C.c_void_p, C.c_long, C.c_int, C.c_int]
        _lib = lib
        return _lib


def available() -> bool:
    try:
        _load()
        return True
    except Mpg123Unavailable:
        return False


def decode(raw: bytes) -> tuple[bytes, int, int]:
    """Decode an mp3 byte stream.

    Returns (pcm_s16le_bytes, sample_rate, channels). Raises ValueError when
    the stream yields no audio, Mpg123Unavailable when the library is absent.
    """
    lib = _load()
    err = C.c_int(0)
    handle = lib.mpg123_new(None, C.byref(err))
    if not handle:
        raise Mpg123Unavailable(f"mpg123_new failed: {err.value}")
    try:
        if lib.mpg123_open_feed(handle) != _MPG123_OK:
            raise ValueError("mpg123_open_feed failed")
        if lib.mpg123_feed(handle, raw, len(raw)) != _MPG123_OK:
            raise ValueError("mpg123 rejected the stream")

        out = bytearray()
        rate, channels = 0, 0
        buf = C.create_string_buffer(1 << 16)
        done = C.c_size_t(0)
        while True:
            ret = lib.mpg123_read(handle, buf, len(buf), C.byref(done))
            if done.value:
                out += buf.raw[:done.value]
            if ret == _MPG123_NEW_FORMAT:
                r = C.c_long(0)
                ch = C.c_int(0)
                enc = C.c_int(0)
                lib.mpg123_getformat(handle, C.byref(r), C.byref(ch), C.byref(enc))
                # pin the output format to s16 at the native rate/channels
                lib.mpg123_format_none(handle)
                lib.mpg123_format(handle, r.value, ch.value, _MPG123_ENC_SIGNED_16)
                rate, channels = int(r.value), int(ch.value)
            elif ret in (_MPG123_NEED_MORE, _MPG123_DONE):
                break
            elif ret != _MPG123_OK:
                raise ValueError(f"mpg123 decode error {ret}")

        if not out or rate <= 0 or channels <= 0:
            raise ValueError("no decodable mp3 audio in stream")
        return bytes(out), rate, channels
    finally:
        lib.mpg123_close(handle)
        lib.mpg123_delete(handle)
