import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from impact_locator import IngestError, StreamHeader, read_binary, read_csv, read_stream, write_binary, write_csv
from impact_locator.events import EventPacket
from impact_locator.io import MAGIC, _HEADER


def write_lines(path, *lines):
    path.write_text("\n".join(lines) + "\n")
    return path


@st.composite
def random_streams(draw):
    width = draw(st.integers(1, 2000))
    height = draw(st.integers(1, 1200))
    n = draw(st.integers(0, 200))
    ts = sorted(draw(st.lists(st.integers(0, 10**9), min_size=n, max_size=n)))
    events = [
        (draw(st.integers(0, width - 1)), draw(st.integers(0, height - 1)), draw(st.sampled_from([1, -1])), t)
        for t in ts
    ]
    stream = EventPacket.from_events(events, width, height)
    header = StreamHeader(width, height, ts[0] if ts else 0, n)
    return header, stream


class TestCsv:
    def test_reads_header_and_single_event(self, tmp_path):
        path = write_lines(tmp_path / "a.csv", "1280,720", "10,20,1,100")
        header, stream = read_csv(path)
        assert (header.width, header.height, header.count) == (1280, 720, 1)
        assert (int(stream.x[0]), int(stream.y[0]), int(stream.p[0]), int(stream.t[0])) == (10, 20, 1, 100)

    def test_zero_polarity_maps_to_negative(self, tmp_path):
        path = write_lines(tmp_path / "a.csv", "16,16", "1,2,0,5")
        _, stream = read_csv(path)
        assert int(stream.p[0]) == -1

    def test_out_of_range_x_reports_line(self, tmp_path):
        path = write_lines(tmp_path / "a.csv", "1280,720", "9999,20,1,100")
        with pytest.raises(IngestError, match="line 2"):
            read_csv(path)

    def test_non_monotonic_timestamp_reports_line(self, tmp_path):
        path = write_lines(tmp_path / "a.csv", "16,16", "0,0,1,200", "0,0,1,100")
        with pytest.raises(IngestError, match="line 3.*non-monotonic"):
            read_csv(path)

    def test_malformed_row_reports_line(self, tmp_path):
        path = write_lines(tmp_path / "a.csv", "16,16", "1,2,3")
        with pytest.raises(IngestError, match="line 2"):
            read_csv(path)

    def test_bad_polarity_rejected(self, tmp_path):
        path = write_lines(tmp_path / "a.csv", "16,16", "1,2,7,5")
        with pytest.raises(IngestError, match="polarity"):
            read_csv(path)

    def test_empty_file_rejected(self, tmp_path):
        path = tmp_path / "a.csv"
        path.write_text("")
        with pytest.raises(IngestError, match="header"):
            read_csv(path)

    def test_header_only_is_valid_empty_stream(self, tmp_path):
        path = write_lines(tmp_path / "a.csv", "64,48")
        header, stream = read_csv(path)
        assert header.count == 0 and len(stream) == 0


class TestBinary:
    def test_bad_magic(self, tmp_path):
        path = tmp_path / "a.evts"
        path.write_bytes(b"NOPE" + bytes(12))
        with pytest.raises(IngestError, match="magic"):
            read_binary(path)

    def test_truncated_header_names_byte_offset(self, tmp_path):
        path = tmp_path / "a.evts"
        path.write_bytes(MAGIC + b"\x00\x01")
        with pytest.raises(IngestError, match="byte 6"):
            read_binary(path)

    def test_truncated_record_names_byte_offset(self, tmp_path):
        path = tmp_path / "a.evts"
        path.write_bytes(_HEADER.pack(MAGIC, 16, 16, 2) + bytes(5))
        with pytest.raises(IngestError, match="truncated at byte"):
            read_binary(path)

    def test_empty_stream_round_trip(self, tmp_path):
        path = tmp_path / "a.evts"
        header = StreamHeader(32, 24, 0, 0)
        write_binary(path, header, EventPacket.empty(32, 24))
        got_header, got = read_binary(path)
        assert got_header == header
        assert len(got) == 0

    def test_write_rejects_out_of_range_event(self, tmp_path):
        stream = EventPacket.from_events([(99, 0, 1, 0)], 100, 100)
        with pytest.raises(IngestError):
            write_binary(tmp_path / "a.evts", StreamHeader(10, 10, 0, 1), stream)

    @given(random_streams())
    @settings(max_examples=60, deadline=None)
    def test_round_trip_is_lossless(self, tmp_path_factory, data):
        header, stream = data
        path = tmp_path_factory.mktemp("rt") / "s.evts"
        write_binary(path, header, stream)
        got_header, got = read_binary(path)
        assert got_header == header
        assert got.t.tolist() == stream.t.tolist()
        assert got.x.tolist() == stream.x.tolist()
        assert got.y.tolist() == stream.y.tolist()
        assert got.p.tolist() == stream.p.tolist()


class TestFormatEquivalence:
    @given(random_streams())
    @settings(max_examples=30, deadline=None)
    def test_csv_and_binary_agree(self, tmp_path_factory, data):
        header, stream = data
        tmp = tmp_path_factory.mktemp("eq")
        write_csv(tmp / "s.csv", header, stream)
        write_binary(tmp / "s.evts", header, stream)
        h1, s1 = read_csv(tmp / "s.csv")
        h2, s2 = read_binary(tmp / "s.evts")
        assert h1 == h2
        assert s1.t.tolist() == s2.t.tolist()
        assert s1.p.tolist() == s2.p.tolist()

    def test_read_stream_dispatches_on_extension(self, tmp_path):
        header = StreamHeader(8, 8, 5, 1)
        stream = EventPacket.from_events([(1, 1, 1, 5)], 8, 8)
        write_csv(tmp_path / "s.csv", header, stream)
        write_binary(tmp_path / "s.evts", header, stream)
        assert read_stream(tmp_path / "s.csv")[0] == header
        assert read_stream(tmp_path / "s.evts")[0] == header
        with pytest.raises(IngestError, match="format"):
            read_stream(tmp_path / "s.evts", fmt="aedat")
