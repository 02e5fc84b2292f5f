import struct

import numpy as np
import pytest
from hypothesis import given, settings

from fedsilo.fedproto import BROADCAST, UPLOAD, CodecError, RoundMessage, decode_message, encode_message
from fedsilo.fedproto.codec import MAX_RANK, decode_hello, encode_hello, frame
from fedsilo.numcore import ParameterVector
from strategies import messages


@settings(max_examples=1000)
@given(messages())
def test_round_trip_is_bitwise(m):
    blob = encode_message(m)
    back = decode_message(blob)
    assert back == m
    assert encode_message(back) == blob


def test_header_only_message():
    m = RoundMessage(BROADCAST, 3, ParameterVector([]))
    blob = encode_message(m)
    assert blob == b"FSL1" + struct.pack("<BIIQI", 0, 3, 0, 0, 0)
    assert decode_message(blob) == m


def test_one_segment_layout():
    m = RoundMessage(UPLOAD, 1, ParameterVector([("w", np.array([1.0, 2.0]))]), client_id=2, n_k=7)
    blob = encode_message(m)
    seg = struct.pack("<H", 1) + b"w" + struct.pack("<BI", 1, 2) + struct.pack("<2d", 1.0, 2.0)
    assert blob == b"FSL1" + struct.pack("<BIIQI", 1, 1, 2, 7, 1) + seg
    assert decode_message(blob) == m


def _blob():
    return encode_message(RoundMessage(UPLOAD, 1, ParameterVector([("a", np.ones(3)), ("b", np.zeros((2, 2)))]),
                                       client_id=1, n_k=5))


def test_bad_magic_reports_offset_zero():
    with pytest.raises(CodecError) as err:
        decode_message(b"XSL1" + _blob()[4:])
    assert err.value.offset == 0


def test_truncation_reports_offset():
    blob = _blob()
    for cut in (3, 10, len(blob) - 1, 30):
        with pytest.raises(CodecError) as err:
            decode_message(blob[:cut])
        assert 0 <= err.value.offset <= cut


def test_duplicate_name_and_trailing_bytes():
    seg = struct.pack("<H", 1) + b"a" + struct.pack("<BI", 1, 1) + struct.pack("<d", 1.0)
    dup = b"FSL1" + struct.pack("<BIIQI", 0, 1, 0, 0, 2) + seg + seg
    with pytest.raises(CodecError, match="duplicate") as err:
        decode_message(dup)
    assert err.value.offset == 25 + len(seg)
    with pytest.raises(CodecError, match="trailing") as err:
        decode_message(_blob() + b"\0")
    assert err.value.offset == len(_blob())


def test_rank_and_field_errors():
    too_deep = b"FSL1" + struct.pack("<BIIQI", 0, 1, 0, 0, 1) + struct.pack("<H", 1) + b"a" + bytes([MAX_RANK + 1])
    with pytest.raises(CodecError, match="rank") as err:
        decode_message(too_deep)
    assert err.value.offset == 28
    with pytest.raises(CodecError):
        encode_message(RoundMessage(BROADCAST, 1, ParameterVector([("a", np.zeros((1,) * 33))])))
    with pytest.raises(CodecError, match="direction"):
        decode_message(b"FSL1" + struct.pack("<BIIQI", 7, 1, 0, 0, 0))
    with pytest.raises(CodecError, match="n_k"):
        decode_message(b"FSL1" + struct.pack("<BIIQI", 1, 1, 0, 0, 0))
    with pytest.raises(ValueError):
        RoundMessage(UPLOAD, 1, ParameterVector([]), 1, 0)


def test_frames_and_hello():
    assert frame(b"abc") == b"\x03\0\0\0abc"
    digest = bytes(range(32))
    assert decode_hello(encode_hello(9, digest)) == (9, digest)
    with pytest.raises(CodecError):
        decode_hello(b"FSLH" + b"\0" * 10)
