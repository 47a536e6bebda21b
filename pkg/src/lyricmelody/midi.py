"""Standard MIDI File reader.

Only what the pipeline needs is kept: resolved notes, lyric/text events, and
the tempo and time-signature maps. Ticks are rescaled to 480 per quarter.
"""

from __future__ import annotations

import struct
import warnings
from collections import defaultdict, deque
from dataclasses import dataclass

from .errors import ParseError
from .representation import TICKS_PER_QUARTER

META_TEXT = 0x01
META_LYRIC = 0x05
META_END_OF_TRACK = 0x2F
META_TEMPO = 0x51
META_TIME_SIGNATURE = 0x58

# Data-byte count of each channel voice status (high nibble).
_CHANNEL_DATA_LEN = {0x80: 2, 0x90: 2, 0xA0: 2, 0xB0: 2, 0xC0: 1, 0xD0: 1, 0xE0: 2}


@dataclass(frozen=True)
class RawNote:
    onset: int
    pitch: int
    duration: int
    velocity: int


@dataclass(frozen=True)
class LyricEvent:
    tick: int
    text: str


@dataclass(frozen=True)
class RawTrack:
    notes: tuple[RawNote, ...]
    lyrics: tuple[LyricEvent, ...]
    texts: tuple[LyricEvent, ...]


@dataclass(frozen=True)
class RawSong:
    """Parsed file contents, all ticks at 480 per quarter note.

    ``tempos`` holds ``(tick, bpm)`` and ``time_signatures`` holds
    ``(tick, numerator, denominator)``; both are sorted by tick.
    """

    tracks: tuple[RawTrack, ...]
    tempos: tuple[tuple[int, float], ...]
    time_signatures: tuple[tuple[int, int, int], ...]

    @property
    def lyric_track(self) -> int | None:
        """Index of the track carrying lyrics (lyric events, else text events)."""
        for attr in ("lyrics", "texts"):
            bearing = [i for i, t in enumerate(self.tracks) if getattr(t, attr)]
            with_notes = [i for i in bearing if self.tracks[i].notes]
            if with_notes or bearing:
                return (with_notes or bearing)[0]
        return None

    @property
    def lyrics(self) -> tuple[LyricEvent, ...]:
        idx = self.lyric_track
        if idx is None:
            return ()
        track = self.tracks[idx]
        return track.lyrics or track.texts

    @property
    def notes(self) -> tuple[RawNote, ...]:
        """Notes of the lyric-bearing track."""
        idx = self.lyric_track
        return () if idx is None else self.tracks[idx].notes


class _Reader:
    def __init__(self, data: bytes, pos: int = 0, end: int | None = None):
        self.data = data
        self.pos = pos
        self.end = len(data) if end is None else end

    def byte(self) -> int:
        if self.pos >= self.end:
            raise ParseError("unexpected end of data", self.pos)
        b = self.data[self.pos]
        self.pos += 1
        return b

    def take(self, n: int) -> bytes:
        if self.pos + n > self.end:
            raise ParseError(f"need {n} bytes, chunk ends early", self.pos)
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def varlen(self) -> int:
        value = 0
        for _ in range(4):
            b = self.byte()
            value = (value << 7) | (b & 0x7F)
            if not b & 0x80:
                return value
        raise ParseError("variable-length quantity longer than 4 bytes", self.pos)


def _decode_text(raw: bytes) -> str:
    try:
        return raw.decode("utf-8")
    except UnicodeDecodeError:
        return raw.decode("latin-1")


def _parse_track(r: _Reader, scale: float, tempos: list, sigs: list) -> RawTrack:
    tick = 0
    status = None
    pending: dict[tuple[int, int], deque] = defaultdict(deque)
    notes: list[RawNote] = []
    lyrics: list[LyricEvent] = []
    texts: list[LyricEvent] = []

    def rescale(t: int) -> int:
        return int(round(t * scale))

    def close(key, t):
        onset, velocity = pending[key].popleft()
        notes.append(RawNote(rescale(onset), key[1], rescale(t) - rescale(onset), velocity))

    while r.pos < r.end:
        tick += r.varlen()
        offset = r.pos
        b = r.byte()
        if b == 0xFF:
            mtype = r.byte()
            data = r.take(r.varlen())
            if mtype == META_END_OF_TRACK:
                break
            if mtype == META_TEMPO:
                if len(data) != 3:
                    raise ParseError("tempo meta event must have 3 data bytes", offset)
                uspq = int.from_bytes(data, "big")
                if uspq == 0:
                    raise ParseError("zero tempo", offset)
                tempos.append((rescale(tick), 60_000_000 / uspq))
            elif mtype == META_TIME_SIGNATURE:
                if len(data) < 2:
                    raise ParseError("time signature meta event too short", offset)
                sigs.append((rescale(tick), data[0], 2 ** data[1]))
            elif mtype == META_LYRIC:
                lyrics.append(LyricEvent(rescale(tick), _decode_text(data)))
            elif mtype == META_TEXT:
                texts.append(LyricEvent(rescale(tick), _decode_text(data)))
            status = None
            continue
        if b in (0xF0, 0xF7):
            r.take(r.varlen())
            status = None
            continue
        if b & 0x80:
            if b >= 0xF0:
                raise ParseError(f"unsupported system message 0x{b:02X}", offset)
            status = b
            first = r.byte()
        else:
            if status is None:
                raise ParseError("running status without a preceding status byte", offset)
            first = b
        kind, channel = status & 0xF0, status & 0x0F
        second = r.byte() if _CHANNEL_DATA_LEN[kind] == 2 else None
        if kind == 0x90 and second:
            pending[(channel, first)].append((tick, second))
        elif kind == 0x80 or (kind == 0x90 and second == 0):
            key = (channel, first)
            if pending[key]:
                close(key, tick)
    for (channel, pitch), queue in pending.items():
        for onset, _ in queue:
            warnings.warn(
                f"note-on without note-off (channel {channel}, pitch {pitch}, tick {onset}); dropped",
                stacklevel=3,
            )
    notes = [n for n in notes if n.duration > 0]
    notes.sort(key=lambda n: (n.onset, n.pitch))
    return RawTrack(tuple(notes), tuple(lyrics), tuple(texts))


def parse_midi(data: bytes) -> RawSong:
    """Parse a type 0 or type 1 Standard MIDI File."""
    r = _Reader(data)
    if data[:4] != b"MThd":
        raise ParseError("missing MThd header", 0)
    r.pos = 4
    length = struct.unpack(">I", r.take(4))[0]
    if length < 6:
        raise ParseError("header chunk shorter than 6 bytes", 4)
    fmt, ntracks, division = struct.unpack(">HHH", r.take(6))
    r.take(length - 6)
    if fmt not in (0, 1):
        raise ParseError(f"unsupported SMF format {fmt}", 8)
    if division & 0x8000:
        raise ParseError("SMPTE time division is not supported", 12)
    if division == 0:
        raise ParseError("zero ticks per quarter note", 12)
    scale = TICKS_PER_QUARTER / division

    tracks = []
    tempos: list[tuple[int, float]] = []
    sigs: list[tuple[int, int, int]] = []
    while len(tracks) < ntracks:
        start = r.pos
        if r.pos + 8 > len(data):
            raise ParseError(f"file ends before track {len(tracks)} of {ntracks}", r.pos)
        chunk_type = r.take(4)
        chunk_len = struct.unpack(">I", r.take(4))[0]
        if r.pos + chunk_len > len(data):
            raise ParseError("chunk length runs past end of file", start)
        if chunk_type != b"MTrk":
            r.pos += chunk_len
            continue
        tracks.append(_parse_track(_Reader(data, r.pos, r.pos + chunk_len), scale, tempos, sigs))
        r.pos += chunk_len
    tempos.sort(key=lambda t: t[0])
    sigs.sort(key=lambda s: s[0])
    return RawSong(tuple(tracks), tuple(tempos), tuple(sigs))
