"""Virtual namespace paths: the unit of storage addressing and of authorization."""

from dataclasses import dataclass
from typing import Iterable, Tuple
from urllib.parse import quote, unquote, urlsplit

from .exc import Kind, TpcError


@dataclass(frozen=True, order=True)
class VirtualPath:
	"""A normalized absolute path within an endpoint's namespace.

	Instances are immutable and hashable; their string form is the canonical text, `/` for the root.
	"""
	
	segments: Tuple[str, ...] = ()
	
	def __post_init__(self):
		for segment in self.segments:
			if not segment or segment in ('.', '..') or '/' in segment or '\0' in segment:
				raise TpcError(Kind.BAD_REQUEST, f"Invalid path segment: {segment!r}")
	
	def __str__(self) -> str:
		return '/' + '/'.join(self.segments)
	
	def __repr__(self) -> str:
		return f"VirtualPath('{self}')"
	
	def __truediv__(self, name:str) -> 'VirtualPath':
		return VirtualPath(self.segments + (name, ))
	
	def __len__(self) -> int:
		return len(self.segments)
	
	@property
	def is_root(self) -> bool:
		return not self.segments
	
	@property
	def name(self) -> str:
		return self.segments[-1] if self.segments else ''
	
	@property
	def parent(self) -> 'VirtualPath':
		return VirtualPath(self.segments[:-1])
	
	@property
	def ancestors(self) -> Iterable['VirtualPath']:
		"""Every proper ancestor, nearest first, ending with the root."""
		
		for i in range(len(self.segments) - 1, -1, -1):
			yield VirtualPath(self.segments[:i])
	
	def contains(self, candidate:'VirtualPath') -> bool:
		return path_contains(self, candidate)


ROOT = VirtualPath()


def normalize_path(raw:str) -> VirtualPath:
	"""Normalize textual path input into a `VirtualPath`.

	Empty and `.` segments vanish, `..` consumes its parent, and relative input is taken relative to the root. Input
	is expected to be already percent-decoded; see `path_from_url` for the URL boundary.
	"""
	
	if '\0' in raw:
		raise TpcError(Kind.BAD_REQUEST, "Path contains a NUL character.")
	
	segments = []
	
	for part in raw.split('/'):
		if part in ('', '.'):
			continue
		
		if part == '..':
			if not segments:
				raise TpcError(Kind.BAD_REQUEST, f"Path escapes the namespace root: {raw!r}")
			
			segments.pop()
			continue
		
		segments.append(part)
	
	return VirtualPath(tuple(segments))


def path_contains(prefix:VirtualPath, candidate:VirtualPath) -> bool:
	"""Segment-wise containment; a path contains itself."""
	
	size = len(prefix.segments)
	return candidate.segments[:size] == prefix.segments


def path_from_url(text:str) -> VirtualPath:
	"""Percent-decode a URL path component exactly once, then normalize it."""
	
	try:
		text = unquote(text, errors='strict')
	except UnicodeDecodeError:
		raise TpcError(Kind.BAD_REQUEST, "Path is not valid UTF-8 once decoded.")
	
	return normalize_path(text)


def split_url(url:str) -> Tuple[str, VirtualPath]:
	"""Split an absolute URL into its origin (scheme, host, and port) and the namespace path it addresses.
	
	Endpoints serve their namespace from the root of their origin, so the origin doubles as the endpoint's base URL.
	"""
	
	try:
		parts = urlsplit(url)
		host, port = parts.hostname, parts.port
	except ValueError as e:
		raise TpcError(Kind.BAD_REQUEST, f"Unparseable URL {url!r}: {e}")
	
	if parts.scheme != 'https' or not host:
		raise TpcError(Kind.BAD_REQUEST, f"Not an absolute https URL: {url!r}")
	
	if ':' in host:
		host = f"[{host}]"
	
	origin = f"{parts.scheme}://{host}" + (f":{port}" if port else '')
	
	return origin, path_from_url(parts.path or '/')


def join_url(base:str, path:VirtualPath) -> str:
	"""The absolute URL of a namespace path on the endpoint at `base`."""
	
	return base.rstrip('/') + quote(str(path), safe="/!$&'()*+,;=:@")
