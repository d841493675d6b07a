"""The storage contract shared by every namespace backend.

Backends implement a handful of primitive operations; this base class provides the public `put`, `get`, `stat`,
`delete`, and `list` operations on top of them, along with write serialization, atomic commit, quota accounting, and
generation numbering.

Two locks are involved. A per-path writer lock serializes uploads to the same path for the whole duration of the
upload. A single short-lived commit lock guards the instant of publication and the instant a reader takes its
snapshot, so a reader observes either the complete previous generation or the complete new one.
"""

from abc import ABCMeta, abstractmethod
from base64 import b64encode
from contextlib import contextmanager
from dataclasses import dataclass
from hashlib import sha256
from threading import Lock, RLock
from time import time
from typing import Any, Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple

from ..exc import Kind, TpcError
from ..path import VirtualPath


log = __import__('logging').getLogger(__name__)

CHUNK = 64 * 1024

ByteRange = Tuple[int, int]  # Half-open: [start, end)


@dataclass(frozen=True)
class ObjectRecord:
	path: VirtualPath
	size: int
	sha256: str  # Lowercase hexadecimal.
	created_at: int
	generation: int
	
	@property
	def digest(self) -> str:
		"""The `Digest` header value (RFC 3230) for this object."""
		return 'sha-256=' + b64encode(bytes.fromhex(self.sha256)).decode('ascii')
	
	@property
	def etag(self) -> str:
		return f'"{self.sha256[:16]}-{self.generation}"'
	
	def meta(self) -> dict:
		return {'size': self.size, 'sha256': self.sha256, 'created_at': self.created_at, 'generation': self.generation}
	
	def as_dict(self) -> dict:
		return dict(path=str(self.path), **self.meta())


class Entry(NamedTuple):
	name: str
	is_container: bool
	record: Optional[ObjectRecord]


class Staged(NamedTuple):
	"""Content fully received and hashed, not yet visible."""
	
	size: int
	sha256: str
	handle: Any  # Backend specific.


class Store(metaclass=ABCMeta):
	capacity_bytes: Optional[int]
	
	def __init__(self, capacity_bytes:Optional[int]=None) -> None:
		self.capacity_bytes = capacity_bytes
		
		self._lock = RLock()
		self._guard = Lock()
		self._writers: Dict[VirtualPath, list] = {}
		self._used = 0
	
	def __repr__(self) -> str:
		return f"{self.__class__.__name__}(capacity_bytes={self.capacity_bytes!r}, used={self._used!r})"
	
	@property
	def used(self) -> int:
		return self._used
	
	# Public operations.
	
	def put(self, path:VirtualPath, content:Iterable[bytes], overwrite:bool=False) -> ObjectRecord:
		"""Store the content at the given path, atomically.

		Without `overwrite` an existing object is a conflict and nothing is modified.
		"""
		
		self._validate(path)
		
		with self._writer(path):
			with self._lock:
				self._check_shape(path, overwrite)
			
			staged = self._stage(content)
			committed = False
			
			try:
				with self._lock:
					existing = self._check_shape(path, overwrite)
					previous = existing.size if existing else 0
					
					if self.capacity_bytes is not None and self._used - previous + staged.size > self.capacity_bytes:
						raise TpcError(Kind.BAD_REQUEST, f"Storage quota exceeded writing {path}: "
								f"{staged.size} bytes requested, {self.capacity_bytes - self._used + previous} available.")
					
					record = ObjectRecord(path, staged.size, staged.sha256, int(time()), self._generation(path, existing))
					self._commit(path, staged, record)
					committed = True
					self._used += staged.size - previous
			
			finally:
				if not committed:
					self._discard(staged)
		
		if __debug__:
			log.debug(f"Stored {path}.", extra=record.as_dict())
		
		return record
	
	def get(self, path:VirtualPath, range:Optional[ByteRange]=None) -> Tuple[Iterator[bytes], ObjectRecord]:
		"""Retrieve the content of an object, or the half-open byte interval `range` of it."""
		
		with self._lock:
			record = self._require(path)
			
			if range is not None:
				start, end = range
				
				if not 0 <= start < end <= record.size:
					raise TpcError(Kind.BAD_REQUEST, f"Unsatisfiable range [{start}, {end}) of {record.size} bytes.")
			else:
				start, end = 0, record.size
			
			snapshot = self._open(path, record)
		
		return self._read(snapshot, start, end), record
	
	def stat(self, path:VirtualPath) -> ObjectRecord:
		with self._lock:
			return self._require(path)
	
	def delete(self, path:VirtualPath) -> ObjectRecord:
		with self._writer(path), self._lock:
			record = self._require(path)
			self._remove(path, record)
			self._used -= record.size
		
		if __debug__:
			log.debug(f"Deleted {path}.", extra=record.as_dict())
		
		return record
	
	def list(self, path:VirtualPath) -> List[Entry]:
		"""List the direct children of a container, sorted by name."""
		
		with self._lock:
			if not path.is_root and self._record(path) is not None:
				raise TpcError(Kind.BAD_REQUEST, f"Not a container: {path}")
			
			entries = sorted(self._children(path))
		
		if not entries and not path.is_root:
			raise TpcError(Kind.NOT_FOUND, f"No such container: {path}")
		
		return entries
	
	def exists(self, path:VirtualPath) -> bool:
		with self._lock:
			return self._record(path) is not None
	
	def is_container(self, path:VirtualPath) -> bool:
		with self._lock:
			return path.is_root or (self._record(path) is None and bool(self._children(path)))
	
	# Shared internals.
	
	@contextmanager
	def _writer(self, path:VirtualPath):
		with self._guard:
			entry = self._writers.setdefault(path, [Lock(), 0])
			entry[1] += 1
		
		try:
			with entry[0]:
				yield
		
		finally:
			with self._guard:
				entry[1] -= 1
				
				if not entry[1]:
					del self._writers[path]
	
	def _require(self, path:VirtualPath) -> ObjectRecord:
		record = self._record(path)
		
		if record is None:
			if not path.is_root and self._children(path):
				raise TpcError(Kind.BAD_REQUEST, f"Not an object: {path} is a container.")
			
			raise TpcError(Kind.NOT_FOUND, f"No such object: {path}")
		
		return record
	
	def _check_shape(self, path:VirtualPath, overwrite:bool) -> Optional[ObjectRecord]:
		if path.is_root:
			raise TpcError(Kind.BAD_REQUEST, "The namespace root is a container.")
		
		existing = self._record(path)
		
		if existing is not None and not overwrite:
			raise TpcError(Kind.CONFLICT, f"Object exists: {path}")
		
		if existing is None and self._children(path):
			raise TpcError(Kind.CONFLICT, f"A container exists at {path}")
		
		for ancestor in path.ancestors:
			if not ancestor.is_root and self._record(ancestor) is not None:
				raise TpcError(Kind.CONFLICT, f"An object exists at {ancestor}, which cannot also be a container.")
		
		return existing
	
	def _generation(self, path:VirtualPath, existing:Optional[ObjectRecord]) -> int:
		return (existing.generation if existing else 0) + 1
	
	@staticmethod
	def _hash(content:Iterable[bytes], sink) -> Tuple[int, str]:
		"""Drain content into the `sink` callable, returning its size and SHA-256."""
		
		digest = sha256()
		size = 0
		
		for chunk in content:
			if not chunk:
				continue
			
			digest.update(chunk)
			sink(chunk)
			size += len(chunk)
		
		return size, digest.hexdigest()
	
	def _validate(self, path:VirtualPath) -> None:
		"""Reject paths this backend cannot represent."""
		pass
	
	# Backend primitives.
	
	@abstractmethod
	def _record(self, path:VirtualPath) -> Optional[ObjectRecord]:
		"""The committed record at exactly this path, if any. Called with the commit lock held."""
	
	@abstractmethod
	def _children(self, path:VirtualPath) -> List[Entry]:
		"""Direct children of the path, objects and implicit containers. Called with the commit lock held."""
	
	@abstractmethod
	def _stage(self, content:Iterable[bytes]) -> Staged:
		"""Receive the content somewhere invisible."""
	
	@abstractmethod
	def _commit(self, path:VirtualPath, staged:Staged, record:ObjectRecord) -> None:
		"""Publish staged content. Called with the commit lock held."""
	
	@abstractmethod
	def _discard(self, staged:Staged) -> None:
		"""Release staged content that will never be committed."""
	
	@abstractmethod
	def _open(self, path:VirtualPath, record:ObjectRecord) -> Any:
		"""Take a snapshot of the committed content. Called with the commit lock held."""
	
	@abstractmethod
	def _read(self, snapshot:Any, start:int, end:int) -> Iterator[bytes]:
		"""Stream bytes [start, end) from a snapshot."""
	
	@abstractmethod
	def _remove(self, path:VirtualPath, record:ObjectRecord) -> None:
		"""Remove a committed object. Called with the commit lock held."""
