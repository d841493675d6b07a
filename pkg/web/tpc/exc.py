"""The third-party copy failure taxonomy and its HTTP renditions."""

from enum import Enum
from re import compile as re
from typing import Optional

from webob.exc import HTTPClientError, HTTPException, status_map


class HTTPClose(HTTPClientError):
	"""Indicate that the client hung up on us before the response completed."""
	
	code = 499
	title = "Client Closed Request"
	explanation = "The client closed the connection before the transfer completed."


class Kind(Enum):
	BAD_REQUEST = 400
	UNAUTHORIZED = 401
	FORBIDDEN = 403
	NOT_FOUND = 404
	CONFLICT = 409
	REMOTE_FAILURE = 502
	TIMEOUT = 504
	CANCELLED = 499
	PROTOCOL_VIOLATION = 598  # Distinct enumeration value; rendered as 502.
	
	@property
	def status(self) -> int:
		return 502 if self is Kind.PROTOCOL_VIOLATION else self.value


# Kinds a caller may reasonably retry.
TRANSIENT = frozenset({Kind.REMOTE_FAILURE, Kind.TIMEOUT})

_CLIENT_STATUS = {
		400: Kind.BAD_REQUEST,
		401: Kind.UNAUTHORIZED,
		403: Kind.FORBIDDEN,
		404: Kind.NOT_FOUND,
		410: Kind.NOT_FOUND,
		409: Kind.CONFLICT,
		412: Kind.CONFLICT,
		408: Kind.TIMEOUT,
		504: Kind.TIMEOUT,
		499: Kind.CANCELLED,
	}

_REASON = re(r'^([A-Z_]+)(?: ([0-9]{3}))?: (.*)$')


class TpcError(Exception):
	"""A classified failure.

	Every failure crossing a module boundary is one of these, carrying a `kind` from the taxonomy, a human readable
	`detail`, and, for failures reported by a remote party, the HTTP status that party answered with.
	"""
	
	kind: Kind
	detail: str
	remote_status: Optional[int]
	
	def __init__(self, kind:Kind, detail:str, remote_status:Optional[int]=None) -> None:
		detail = ' '.join(str(detail).split()) or kind.name.replace('_', ' ').lower()
		
		super().__init__(kind, detail, remote_status)
		
		self.kind = kind
		self.detail = detail
		self.remote_status = remote_status
	
	def __str__(self) -> str:
		return self.reason
	
	def __repr__(self) -> str:
		return f"{self.__class__.__name__}({self.kind.name}, {self.detail!r}, remote_status={self.remote_status!r})"
	
	def __eq__(self, other):
		if not isinstance(other, TpcError):
			return NotImplemented
		
		return (self.kind, self.detail, self.remote_status) == (other.kind, other.detail, other.remote_status)
	
	__hash__ = Exception.__hash__
	
	@property
	def status(self) -> int:
		return self.kind.status
	
	@property
	def reason(self) -> str:
		"""The single-line rendition used after `failure: ` in a COPY response body."""
		
		if self.remote_status is not None:
			return f"{self.kind.name} {self.remote_status}: {self.detail}"
		
		return f"{self.kind.name}: {self.detail}"
	
	@classmethod
	def parse_reason(cls, text:str) -> 'TpcError':
		"""Recover a classified failure from a terminal failure reason.

		Reasons produced by other implementations will not follow our `KIND [status]: detail` shape; these are
		classified as remote failures carrying the complete text.
		"""
		
		match = _REASON.match(text)
		
		if match and match.group(1) in Kind.__members__:
			status = match.group(2)
			return cls(Kind[match.group(1)], match.group(3), int(status) if status else None)
		
		return cls(Kind.REMOTE_FAILURE, text or "remote endpoint reported failure")
	
	@classmethod
	def from_status(cls, status:int, detail:str='', remote:bool=False) -> 'TpcError':
		"""Classify an HTTP status answered by another party.

		The active endpoint of a transfer passes `remote=True`: anything its passive peer refuses is a remote
		failure regardless of the status. Orchestrators talking to an endpoint directly get the finer mapping.
		"""
		
		detail = detail or f"remote answered {status}"
		
		if remote:
			return cls(Kind.REMOTE_FAILURE, detail, status)
		
		kind = _CLIENT_STATUS.get(status)
		
		if kind is None:
			kind = Kind.REMOTE_FAILURE if status >= 500 else Kind.PROTOCOL_VIOLATION
		
		return cls(kind, detail, status)
	
	def response(self) -> HTTPException:
		"""Render as a WebOb HTTP exception, itself a WSGI application."""
		
		if self.kind is Kind.CANCELLED:
			return HTTPClose(self.detail)
		
		return status_map[self.status](self.detail)
	
	def as_dict(self) -> dict:
		return {'kind': self.kind.name, 'detail': self.detail, 'remote_status': self.remote_status}


class ConfigError(TpcError):
	"""A configuration value failed validation."""
	
	field: str
	
	def __init__(self, field:str, detail:str) -> None:
		super().__init__(Kind.BAD_REQUEST, f"{field}: {detail}")
		self.field = field
	
	def __repr__(self) -> str:
		return f"{self.__class__.__name__}({self.field!r}, {self.detail!r})"
