from pathlib import Path

import pytest

from web.tpc.exc import Kind, TpcError
from web.tpc.marker import CREATED, MarkerParser, PerfMarker, Terminal, parse_perf_marker_stream, render_body


FIXTURES = sorted((Path(__file__).parent / 'fixtures' / 'markers').glob('body-*.txt'))

SAMPLE = (
		b"Perf Marker\n"
		b"    Timestamp: 1700000000\n"
		b"    Stripe Index: 0\n"
		b"    Stripe Bytes Transferred: 1048576\n"
		b"    Total Stripe Count: 1\n"
		b"End\n"
		b"success: Created\n"
	)


def parse(body):
	items = list(parse_perf_marker_stream(body))
	return items[:-1], items[-1]


class TestRendering(object):
	def test_sample(self):
		marker = PerfMarker(1700000000, 0, 1048576, 1)
		assert render_body([marker], CREATED).encode() == SAMPLE
	
	def test_empty(self):
		assert render_body([], CREATED) == "success: Created\n"
	
	def test_failure(self):
		err = TpcError(Kind.TIMEOUT, "No progress for 60 seconds.")
		assert Terminal.failed(err).render() == "failure: TIMEOUT: No progress for 60 seconds.\n"
		assert Terminal.failed(err).error == err
	
	def test_success_carries_no_error(self):
		assert CREATED.error is None


class TestGoldenBodies(object):
	def test_fixture_count(self):
		assert len(FIXTURES) == 20
	
	@pytest.mark.parametrize('path', FIXTURES, ids=lambda p: p.stem)
	def test_parse_and_render_reproduce_the_body(self, path):
		raw = path.read_bytes()
		markers, terminal = parse(raw)
		
		assert all(isinstance(m, PerfMarker) for m in markers)
		assert isinstance(terminal, Terminal)
		assert render_body(markers, terminal).encode() == raw
	
	@pytest.mark.parametrize('path', FIXTURES, ids=lambda p: p.stem)
	def test_byte_at_a_time(self, path):
		raw = path.read_bytes()
		assert list(parse_perf_marker_stream(raw[i:i + 1] for i in range(len(raw)))) == \
				list(parse_perf_marker_stream(raw))
	
	def test_failure_reasons_classify(self):
		_, terminal = parse((Path(__file__).parent / 'fixtures' / 'markers' / 'body-01.txt').read_bytes())
		assert not terminal.success
		assert terminal.error.kind is Kind.REMOTE_FAILURE
		assert terminal.error.remote_status == 404


class TestParser(object):
	def test_incremental(self):
		parser = MarkerParser()
		head, tail = SAMPLE[:30], SAMPLE[30:]
		
		assert parser.feed(head) == []
		items = parser.feed(tail)
		
		assert items == [PerfMarker(1700000000, 0, 1048576, 1), CREATED]
		assert parser.close() == CREATED
		assert parser.terminal == CREATED
	
	@pytest.mark.parametrize('body', [
			b"",  # No terminal.
			b"success: Created",  # Unterminated line.
			b"Perf Marker\n    Timestamp: 1\n",  # Ends inside a block.
			b"success: Created\nsuccess: Created\n",  # Trailing data.
			b"success: Created\n\n",
			b"Perf Marker\n    Timestamp: -1\n",
			b"Perf Marker\n    Timestamp: 01\n",
			b"Perf Marker\n    Stripe Index: 0\n",  # Out of order.
			b"Perf Marker\n    Timestamp: 1\n    Stripe Index: 0\n    Stripe Bytes Transferred: 0\n"
					b"    Total Stripe Count: 1\nEnd of it\n",
			b"Perf Marker\n    Timestamp: 1\n    Stripe Index: 2\n    Stripe Bytes Transferred: 0\n"
					b"    Total Stripe Count: 2\nEnd\nsuccess: Created\n",  # Index out of range.
			b"hello\n",
			b"success: \xff\n",
			b"Perf Marker\r\n",
		])
	def test_violations(self, body):
		with pytest.raises(TpcError) as exc:
			list(parse_perf_marker_stream(body))
		
		assert exc.value.kind is Kind.PROTOCOL_VIOLATION
	
	def test_markers_yielded_before_a_late_violation(self):
		seen = []
		
		with pytest.raises(TpcError):
			for item in parse_perf_marker_stream([SAMPLE[:-len(b"success: Created\n")], b"garbage\n"]):
				seen.append(item)
		
		assert seen == [PerfMarker(1700000000, 0, 1048576, 1)]
	
	def test_foreign_failure_reason(self):
		_, terminal = parse(b"failure: Something bad\n")
		assert terminal.error.kind is Kind.REMOTE_FAILURE
		assert terminal.error.detail == "Something bad"


class TestValidation(object):
	@pytest.mark.parametrize('fields', [(-1, 0, 0, 1), (0, -1, 0, 1), (0, 0, -1, 1), (0, 0, 0, 0), (0, 1, 0, 1)])
	def test_invalid_marker(self, fields):
		with pytest.raises(TpcError):
			PerfMarker(*fields)
	
	def test_multiline_reason(self):
		with pytest.raises(TpcError):
			Terminal(False, "one\ntwo")
