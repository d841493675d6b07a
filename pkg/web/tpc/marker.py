"""Performance markers: the progress records streamed in the body of a COPY response.

A body is zero or more marker blocks followed by exactly one terminal line:

	Perf Marker
	    Timestamp: 1700000000
	    Stripe Index: 0
	    Stripe Bytes Transferred: 1048576
	    Total Stripe Count: 1
	End
	success: Created

A failed transfer ends with `failure: <reason>` instead. Lines end with a single line feed. Nothing may follow the
terminal line.
"""

from dataclasses import dataclass
from re import compile as re
from typing import Iterable, Iterator, List, Optional, Union

from .exc import Kind, TpcError


_INTEGER = re(r'0|[1-9][0-9]*')

_FIELDS = (
		('timestamp', "    Timestamp: "),
		('stripe_index', "    Stripe Index: "),
		('stripe_bytes_transferred', "    Stripe Bytes Transferred: "),
		('total_stripe_count', "    Total Stripe Count: "),
	)

BEGIN = "Perf Marker"
END = "End"
SUCCESS = "success: "
FAILURE = "failure: "


@dataclass(frozen=True)
class PerfMarker:
	timestamp: int
	stripe_index: int
	stripe_bytes_transferred: int
	total_stripe_count: int
	
	def __post_init__(self):
		if self.timestamp < 0 or self.stripe_index < 0 or self.stripe_bytes_transferred < 0:
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"Negative performance marker field: {self!r}")
		
		if self.total_stripe_count < 1 or self.stripe_index >= self.total_stripe_count:
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"Stripe index out of range: {self!r}")
	
	def render(self) -> str:
		return render_perf_marker(self)
	
	def as_dict(self) -> dict:
		return {
				'timestamp': self.timestamp,
				'stripe_index': self.stripe_index,
				'stripe_bytes_transferred': self.stripe_bytes_transferred,
				'total_stripe_count': self.total_stripe_count,
			}


@dataclass(frozen=True)
class Terminal:
	"""The final line of a COPY response body."""
	
	success: bool
	reason: str = "Created"
	
	def __post_init__(self):
		if '\n' in self.reason or '\r' in self.reason:
			raise TpcError(Kind.PROTOCOL_VIOLATION, "Terminal reasons are a single line.")
	
	def render(self) -> str:
		return (SUCCESS if self.success else FAILURE) + self.reason + "\n"
	
	@property
	def error(self) -> Optional[TpcError]:
		"""The classified failure carried by a failure line."""
		return None if self.success else TpcError.parse_reason(self.reason)
	
	@classmethod
	def failed(cls, error:TpcError) -> 'Terminal':
		return cls(False, error.reason)


CREATED = Terminal(True, "Created")

Item = Union[PerfMarker, Terminal]


def render_perf_marker(m:PerfMarker) -> str:
	lines = [BEGIN]
	lines.extend(f"{label}{getattr(m, name)}" for name, label in _FIELDS)
	lines.append(END)
	return "\n".join(lines) + "\n"


def render_body(markers:Iterable[PerfMarker], terminal:Terminal) -> str:
	return ''.join(m.render() for m in markers) + terminal.render()


class MarkerParser:
	"""An incremental parser over arbitrarily chunked COPY response bodies.

	Feed it bytes as they arrive; each call returns the markers (and possibly the terminal) completed by that chunk.
	Call `close()` at end of input to assert the body was complete.
	"""
	
	__slots__ = ('_buffer', '_block', '_terminal')
	
	def __init__(self):
		self._buffer = b''
		self._block = None  # Field values collected so far for the marker block being parsed.
		self._terminal = None
	
	@property
	def terminal(self) -> Optional[Terminal]:
		return self._terminal
	
	def feed(self, data:bytes) -> List[Item]:
		self._buffer += data
		items = []
		
		while b"\n" in self._buffer:
			line, _, self._buffer = self._buffer.partition(b"\n")
			item = self._line(line)
			
			if item is not None:
				items.append(item)
		
		if self._terminal is not None and self._buffer:
			raise TpcError(Kind.PROTOCOL_VIOLATION, "Trailing data after the terminal line.")
		
		return items
	
	def close(self) -> Terminal:
		if self._buffer:
			raise TpcError(Kind.PROTOCOL_VIOLATION, "Body ends with an unterminated line.")
		
		if self._block is not None:
			raise TpcError(Kind.PROTOCOL_VIOLATION, "Body ends inside a performance marker block.")
		
		if self._terminal is None:
			raise TpcError(Kind.PROTOCOL_VIOLATION, "Body ends without a terminal success or failure line.")
		
		return self._terminal
	
	def _line(self, raw:bytes) -> Optional[Item]:
		if self._terminal is not None:
			raise TpcError(Kind.PROTOCOL_VIOLATION, "Trailing data after the terminal line.")
		
		try:
			line = raw.decode('utf-8')
		except UnicodeDecodeError:
			raise TpcError(Kind.PROTOCOL_VIOLATION, "Body is not valid UTF-8.")
		
		if self._block is None:
			if line == BEGIN:
				self._block = []
				return None
			
			if line.startswith(SUCCESS):
				self._terminal = Terminal(True, line[len(SUCCESS):])
				return self._terminal
			
			if line.startswith(FAILURE):
				self._terminal = Terminal(False, line[len(FAILURE):])
				return self._terminal
			
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"Unexpected line outside a marker block: {line!r}")
		
		if len(self._block) == len(_FIELDS):
			if line != END:
				raise TpcError(Kind.PROTOCOL_VIOLATION, f"Expected end of marker block, found: {line!r}")
			
			marker = PerfMarker(*self._block)
			self._block = None
			return marker
		
		name, label = _FIELDS[len(self._block)]
		
		if not line.startswith(label) or not _INTEGER.fullmatch(line[len(label):]):
			raise TpcError(Kind.PROTOCOL_VIOLATION, f"Malformed {name.replace('_', ' ')} line: {line!r}")
		
		self._block.append(int(line[len(label):]))
		return None


def parse_perf_marker_stream(body:Union[bytes, Iterable[bytes]]) -> Iterator[Item]:
	"""Parse a complete COPY response body, yielding markers as they are found, then the terminal."""
	
	if isinstance(body, (bytes, bytearray)):
		body = (bytes(body), )
	
	parser = MarkerParser()
	
	for chunk in body:
		yield from parser.feed(chunk)
	
	parser.close()
